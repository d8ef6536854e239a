use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{FinslerError, Result};
use crate::numcore::sampling::seeded_rng;

/// Orthonormal basis of the common kernel of `rows`, built by modified
/// Gram-Schmidt over the canonical basis `e_1, .., e_dim` in that order.
pub fn null_space_basis(rows: &[DVector<f64>], dim: usize, tol: f64) -> Result<Vec<DVector<f64>>> {
    null_space_basis_with(rows, dim, tol, &canonical_basis(dim))
}

/// Same as [`null_space_basis`] with an explicit, ordered candidate set.
/// The candidates must span the space.
pub fn null_space_basis_with(
    rows: &[DVector<f64>],
    dim: usize,
    tol: f64,
    candidates: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    let mut row_basis: Vec<DVector<f64>> = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(FinslerError::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        let norm = row.norm();
        if !norm.is_finite() {
            return Err(FinslerError::Numeric(format!("row {idx} is not finite")));
        }
        if norm == 0.0 {
            return Err(FinslerError::Degenerate(format!("row {idx} is identically zero")));
        }
        let mut r = row / norm;
        orthogonalize(&mut r, &row_basis);
        let rn = r.norm();
        // rows within tol of the span so far add no new constraint
        if rn > tol {
            row_basis.push(r / rn);
        }
    }

    let target = dim - row_basis.len();
    let mut kernel: Vec<DVector<f64>> = Vec::with_capacity(target);
    for c in candidates {
        if kernel.len() == target {
            break;
        }
        let mut k = c.clone();
        orthogonalize(&mut k, &row_basis);
        orthogonalize(&mut k, &kernel);
        let kn = k.norm();
        if kn > 1e-3 {
            kernel.push(k / kn);
        }
    }
    if kernel.len() != target {
        return Err(FinslerError::Degenerate(
            "candidate set does not span the kernel".into(),
        ));
    }
    Ok(kernel)
}

/// Two passes of modified Gram-Schmidt against an orthonormal set.
fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
}

pub fn canonical_basis(dim: usize) -> Vec<DVector<f64>> {
    (0..dim)
        .map(|j| DVector::from_fn(dim, |i, _| if i == j { 1.0 } else { 0.0 }))
        .collect()
}

/// Seeded random orthonormal frame followed by the canonical basis, usable
/// as a reproducible candidate set for [`null_space_basis_with`].
pub fn seeded_frame(dim: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = seeded_rng(seed);
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(2 * dim);
    while frame.len() < dim {
        let mut g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        orthogonalize(&mut g, &frame);
        let n = g.norm();
        if n > 1e-3 {
            frame.push(g / n);
        }
    }
    frame.extend(canonical_basis(dim));
    frame
}

/// Solves `g x = rhs` for symmetric positive definite `g`, refusing when the
/// spectral condition number exceeds `max_condition`.
pub fn solve_spd(g: &DMatrix<f64>, rhs: &DVector<f64>, max_condition: f64) -> Result<DVector<f64>> {
    let (lo, hi) = extreme_eigenvalues(g)?;
    if !(lo > 0.0) {
        return Err(FinslerError::Singularity(format!(
            "matrix not positive definite (min eigenvalue {lo:e})"
        )));
    }
    if hi / lo > max_condition {
        return Err(FinslerError::Singularity(format!(
            "condition number {:e} exceeds {max_condition:e}",
            hi / lo
        )));
    }
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| FinslerError::Singularity("Cholesky factorization failed".into()))?;
    Ok(chol.solve(rhs))
}

/// (smallest, largest) eigenvalue of a symmetric matrix.
pub fn extreme_eigenvalues(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(FinslerError::Numeric("non-finite matrix entry".into()));
    }
    let n = m.nrows();
    if n == 1 {
        return Ok((m[(0, 0)], m[(0, 0)]));
    }
    if n == 2 {
        let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        return Ok((mean - rad, mean + rad));
    }
    let eig = m.clone().symmetric_eigenvalues();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

pub mod serde_vec {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

/// Row-major nested arrays.
pub mod serde_mat {
    use nalgebra::DMatrix;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().cloned().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}

pub mod serde_vecs {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
        Ok(Vec::<Vec<f64>>::deserialize(d)?
            .into_iter()
            .map(DVector::from_vec)
            .collect())
    }
}
