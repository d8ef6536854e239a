//! Numerical Finsler geometry on a single coordinate patch.
//!
//! Metrics, their canonical sprays and geodesics, the local quasi-distance
//! obtained by inverting the exponential map, distance coordinate charts and
//! diagnostics for isometries and submetries.

pub mod distance;
pub mod distchart;
pub mod error;
pub mod geodesics;
pub mod maps;
pub mod metrics;
pub mod numcore;
pub mod report;
pub mod spray;

pub use error::{FinslerError, Result};
pub use metrics::{validate_finsler, EnergyJet, FinslerMetric, Jet, MetricFamily};
pub use numcore::{ChartPoint, DiffConfig, PatchSpec, TangentVector};
pub use report::{CheckOutcome, ValidationReport, Witness};
pub use spray::{canonical_spray_residuals, spray_coefficients, PerturbedSpray, Spray, SprayField, SprayResiduals};
pub use geodesics::{
    emanating_point, exponential, integrate_geodesic, normal_radius, EmanatingPoint, GeodesicPath, NormalRadiusEstimate,
};
pub use distance::{distance, invert_exp, quasimetric_audit, QuasiMetricOracle, ShootingResult};
pub use distchart::{build_distance_chart, evaluate_chart, invert_chart, sphere_tangent_basis, DistanceChart};
pub use maps::{MapProbe, MapSpec, SubmetryProbe};
