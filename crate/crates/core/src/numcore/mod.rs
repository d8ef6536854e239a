//! Coordinate patches, points, finite differences and small linear algebra.

mod diff;
mod linalg;
mod patch;
pub mod sampling;

pub use diff::{
    central_difference_vec, directional_derivative, directional_derivative_vec, gradient, jacobian, second_derivative,
    DiffConfig,
};
pub use linalg::{
    canonical_basis, extreme_eigenvalues, null_space_basis, null_space_basis_with, seeded_frame, serde_mat,
    serde_vec, serde_vecs, solve_spd,
};
pub use patch::{ChartPoint, Constraint, Interval, PatchSpec, TangentVector};
pub use sampling::SamplingRegion;
