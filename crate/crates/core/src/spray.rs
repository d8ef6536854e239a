//! Canonical spray coefficients and the scalar residual equations that
//! characterise them.
//!
//! In coordinates a spray is `S = y^i d/dx^i - 2 G^i d/dy^i` and its geodesics
//! solve `x'' = -2 G(x, x')`. For a coordinate field `X = d/dx^j` the lifts are
//! `X^v = d/dy^j` and `X^c = d/dx^j`, so `S(X^v F) - X^c F` becomes
//!
//! ```text
//! R_j = y^i F_{x^i y^j} - 2 G^i F_{y^i y^j} - F_{x^j}
//! ```
//!
//! and `SF = y^i F_{x^i} - 2 G^i F_{y^i}`. The same expression with `E` in
//! place of `F` is the energy residual; solving it for zero gives the
//! linear system `g G = (E_xy^T y - E_x) / 2` used to build `G`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::metrics::{FinslerMetric, Jet};
use crate::numcore::sampling::{log_uniform, seeded_rng, unit_direction};
use crate::numcore::{directional_derivative, jacobian, solve_spd, DiffConfig};

/// Fundamental tensors with a larger condition number are refused.
pub const MAX_CONDITION: f64 = 1e10;

/// Spray coefficients on the patch of a metric.
pub trait Spray: Send + Sync {
    fn metric(&self) -> &FinslerMetric;

    /// `G(x, y)` for `y != 0`.
    fn coefficients(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>>;

    fn dim(&self) -> usize {
        self.metric().dim()
    }
}

/// The canonical spray of a metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SprayField {
    metric: FinslerMetric,
}

impl SprayField {
    pub fn new(metric: FinslerMetric) -> Self {
        SprayField { metric }
    }
}

impl Spray for SprayField {
    fn metric(&self) -> &FinslerMetric {
        &self.metric
    }

    fn coefficients(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        spray_coefficients(&self.metric, x, y)
    }
}

/// The canonical spray plus `F(x,y)^2 * offset`. Still 2-homogeneous, but not
/// canonical whenever `offset != 0`; used to exercise the residual checks.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedSpray {
    base: SprayField,
    offset: DVector<f64>,
}

impl PerturbedSpray {
    pub fn new(metric: FinslerMetric, offset: DVector<f64>) -> Result<Self> {
        if offset.len() != metric.dim() {
            return Err(FinslerError::DimensionMismatch {
                expected: metric.dim(),
                got: offset.len(),
            });
        }
        Ok(PerturbedSpray {
            base: SprayField::new(metric),
            offset,
        })
    }
}

impl Spray for PerturbedSpray {
    fn metric(&self) -> &FinslerMetric {
        self.base.metric()
    }

    fn coefficients(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.base.metric.evaluate_f(x, y)?;
        Ok(self.base.coefficients(x, y)? + &self.offset * (f * f))
    }
}

/// Canonical spray coefficients at `(x, y)`, `y != 0`.
pub fn spray_coefficients(m: &FinslerMetric, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let ej = m.energy_jet(x, y)?;
    let rhs = ej.spray_rhs(y);
    solve_spd(&ej.e_yy, &rhs, MAX_CONDITION)
}

/// Residuals of the characterising equations for one spray at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprayResiduals {
    /// `S(X^v F) - X^c F` for the coordinate fields `X = d/dx^j`.
    pub rapcsak_residuals: Vec<f64>,
    /// `S F`.
    pub sf_residual: f64,
    /// `S(X^v E) - X^c E` for the coordinate fields.
    pub energy_residuals: Vec<f64>,
    pub f: f64,
}

impl SprayResiduals {
    pub fn max_rapcsak(&self) -> f64 {
        self.rapcsak_residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Largest of `|R_j|` and `|SF|`.
    pub fn max_abs(&self) -> f64 {
        self.max_rapcsak().max(self.sf_residual.abs())
    }
}

fn residuals_from_jet(jet: &Jet, y: &DVector<f64>, g: &DVector<f64>) -> SprayResiduals {
    let rapcsak = jet.f_xy.tr_mul(y) - (&jet.f_yy * g) * 2.0 - &jet.f_x;
    let sf = y.dot(&jet.f_x) - 2.0 * g.dot(&jet.f_y);
    let energy = jet.energy();
    let energy_res = energy.e_xy.tr_mul(y) - (&energy.e_yy * g) * 2.0 - &energy.e_x;
    SprayResiduals {
        rapcsak_residuals: rapcsak.iter().cloned().collect(),
        sf_residual: sf,
        energy_residuals: energy_res.iter().cloned().collect(),
        f: jet.f,
    }
}

/// Residuals of an arbitrary spray against the metric it is attached to,
/// with every derivative of `F` taken by finite differences.
pub fn spray_residuals(s: &dyn Spray, x: &DVector<f64>, y: &DVector<f64>, cfg: &DiffConfig) -> Result<SprayResiduals> {
    let g = s.coefficients(x, y)?;
    let jet = s.metric().fd_jet(x, y, cfg)?;
    Ok(residuals_from_jet(&jet, y, &g))
}

/// [`spray_residuals`] for the canonical spray with the default differencing.
pub fn canonical_spray_residuals(m: &FinslerMetric, x: &DVector<f64>, y: &DVector<f64>) -> Result<SprayResiduals> {
    spray_residuals(&SprayField::new(m.clone()), x, y, &DiffConfig::default())
}

/// `S(X^v F) - X^c F` for a general vector field `X`, computed directly from
/// the lifts: `X^v F = X(x) . F_y`, and `X^c` is the derivation along
/// `(X(x), DX(x) y)` in `(x, y)` space.
pub fn vector_field_residual<X>(
    s: &dyn Spray,
    field: X,
    x: &DVector<f64>,
    y: &DVector<f64>,
    cfg: &DiffConfig,
) -> Result<f64>
where
    X: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let m = s.metric();
    let n = m.dim();
    let split = |z: &DVector<f64>| (z.rows(0, n).into_owned(), z.rows(n, n).into_owned());
    let mut z = DVector::zeros(2 * n);
    z.rows_mut(0, n).copy_from(x);
    z.rows_mut(n, n).copy_from(y);

    let g = s.coefficients(x, y)?;
    let mut s_dir = DVector::zeros(2 * n);
    s_dir.rows_mut(0, n).copy_from(y);
    s_dir.rows_mut(n, n).copy_from(&(&g * -2.0));

    let vertical = |z: &DVector<f64>| -> Result<f64> {
        let (xs, ys) = split(z);
        Ok(field(&xs)?.dot(&m.jet(&xs, &ys)?.f_y))
    };
    let s_of_vertical = directional_derivative(vertical, &z, &s_dir, cfg)?;

    let dx = jacobian(&field, x, cfg)?;
    let mut c_dir = DVector::zeros(2 * n);
    c_dir.rows_mut(0, n).copy_from(&field(x)?);
    c_dir.rows_mut(n, n).copy_from(&(dx * y));
    let complete = if c_dir.iter().all(|v| *v == 0.0) {
        0.0
    } else {
        directional_derivative(
            |z| {
                let (xs, ys) = split(z);
                m.evaluate_f(&xs, &ys)
            },
            &z,
            &c_dir,
            cfg,
        )?
    };
    Ok(s_of_vertical - complete)
}

/// Largest `|G(x, l y) - l^2 G(x, y)| / l^2` over seeded samples and
/// `l in {0.5, 2, 10}`.
pub fn spray_homogeneity_defect(s: &dyn Spray, samples: usize, seed: u64) -> Result<f64> {
    let m = s.metric();
    let region = m.sampling_region();
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples.max(1) {
        let x = region.sample(&mut rng);
        let y = unit_direction(&mut rng, m.dim()) * log_uniform(&mut rng, 1e-2, 1e2);
        let g = s.coefficients(&x, &y)?;
        for lambda in [0.5, 2.0, 10.0] {
            let gl = s.coefficients(&x, &(&y * lambda))?;
            let d = (gl - &g * (lambda * lambda)).amax() / (lambda * lambda);
            worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        }
    }
    Ok(worst)
}

/// Fundamental tensor and right-hand side of the spray system `g G = rhs`.
pub fn spray_system(m: &FinslerMetric, x: &DVector<f64>, y: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let ej = m.energy_jet(x, y)?;
    let rhs = ej.spray_rhs(y);
    Ok((ej.e_yy, rhs))
}
