//! Built-in Finsler metric families.
//!
//! Every family is evaluated in closed form (value, first and second
//! partials). [`FinslerMetric::fd_jet`] recomputes the same jet by finite
//! differences of `F` alone and is used to cross-check the closed forms and
//! to evaluate residual equations independently of them.

mod jet;
mod validate;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::numcore::{second_derivative, central_difference_vec, DiffConfig, Interval, PatchSpec, SamplingRegion};

pub use jet::{EnergyJet, Jet};
pub use validate::validate_finsler;

/// Points closer than this to the patch boundary are refused.
pub const BOUNDARY_MARGIN: f64 = 10.0 * 6.055_454_452_393_343e-6;

/// Serializable description of a metric, as found in scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MetricFamily {
    Euclidean {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    /// Quartic Minkowski norm `F(y) = (sum y_i^4 + kappa |y|^4)^(1/4)`.
    MinkowskiNorm {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "one")]
        kappa: f64,
    },
    /// `F = exp(phi(x)) sqrt(y^T A y)` with `phi = <c, x> + s |x|^2 / 2`.
    Riemannian {
        coefficients: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        conformal_linear: Option<Vec<f64>>,
        #[serde(default)]
        conformal_quadratic: f64,
    },
    /// `F = sqrt(y^T A y) + <b(x), y>` with `b(x) = drift + drift_gradient x`.
    Randers {
        drift: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficients: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift_gradient: Option<Vec<Vec<f64>>>,
    },
    /// Upper half-space model, `F = scale |y| / x_n` on `x_n > 0`.
    HyperbolicHalfPlane {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Stereographic chart of the round sphere of the given radius,
    /// `F = 2 R |y| / (1 + |x|^2)`, restricted to `|x| < chart_radius`.
    RoundSpherePatch {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "default_chart_radius")]
        chart_radius: f64,
    },
}

fn default_dim() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

fn default_chart_radius() -> f64 {
    20.0
}

impl MetricFamily {
    pub const NAMES: [&'static str; 6] = [
        "euclidean",
        "minkowski-norm",
        "riemannian",
        "randers",
        "hyperbolic-half-plane",
        "round-sphere-patch",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricFamily::Euclidean { .. } => "euclidean",
            MetricFamily::MinkowskiNorm { .. } => "minkowski-norm",
            MetricFamily::Riemannian { .. } => "riemannian",
            MetricFamily::Randers { .. } => "randers",
            MetricFamily::HyperbolicHalfPlane { .. } => "hyperbolic-half-plane",
            MetricFamily::RoundSpherePatch { .. } => "round-sphere-patch",
        }
    }
}

/// Conformal factor `exp(phi)` of the Riemannian-type families.
#[derive(Debug, Clone, PartialEq)]
enum Potential {
    Zero,
    Quadratic { linear: DVector<f64>, quadratic: f64 },
    /// `phi = ln(scale) - ln(x_n)`
    HalfSpace { ln_scale: f64 },
    /// `phi = ln(2R) - ln(1 + |x|^2)`
    Stereographic { ln_two_r: f64 },
}

impl Potential {
    /// `(phi, grad phi)`
    fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = x.len();
        match self {
            Potential::Zero => (0.0, DVector::zeros(n)),
            Potential::Quadratic { linear, quadratic } => {
                let phi = linear.dot(x) + 0.5 * quadratic * x.norm_squared();
                (phi, linear + x * *quadratic)
            }
            Potential::HalfSpace { ln_scale } => {
                let h = x[n - 1];
                let mut grad = DVector::zeros(n);
                grad[n - 1] = -1.0 / h;
                (ln_scale - h.ln(), grad)
            }
            Potential::Stereographic { ln_two_r } => {
                let s = 1.0 + x.norm_squared();
                (ln_two_r - s.ln(), x * (-2.0 / s))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Conformal { a: DMatrix<f64>, potential: Potential },
    Randers { a: DMatrix<f64>, b0: DVector<f64>, grad: DMatrix<f64> },
    Quartic { kappa: f64 },
}

/// A Finsler function on a single coordinate patch.
#[derive(Debug, Clone, PartialEq)]
pub struct FinslerMetric {
    family: MetricFamily,
    patch: PatchSpec,
    model: Model,
    reversible: bool,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(FinslerError::InvalidParameter(format!("{what} must be a non-empty square matrix")));
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if !m.iter().all(|v| v.is_finite()) {
        return Err(FinslerError::InvalidParameter(format!("{what} has non-finite entries")));
    }
    Ok(m)
}

fn spd(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let m = matrix(rows, what)?;
    if (&m - m.transpose()).amax() > 1e-12 * m.amax() {
        return Err(FinslerError::InvalidParameter(format!("{what} is not symmetric")));
    }
    if m.clone().cholesky().is_none() {
        return Err(FinslerError::InvalidParameter(format!("{what} is not positive definite")));
    }
    Ok(m)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

impl FinslerMetric {
    pub fn new(family: MetricFamily) -> Result<Self> {
        let (patch, model) = match &family {
            MetricFamily::Euclidean { dim } => (
                PatchSpec::unbounded(*dim),
                Model::Conformal {
                    a: DMatrix::identity(*dim, *dim),
                    potential: Potential::Zero,
                },
            ),
            MetricFamily::MinkowskiNorm { dim, kappa } => {
                if !(*kappa > 0.0 && kappa.is_finite()) {
                    return Err(FinslerError::InvalidParameter("kappa must be positive".into()));
                }
                (PatchSpec::unbounded(*dim), Model::Quartic { kappa: *kappa })
            }
            MetricFamily::Riemannian {
                coefficients,
                conformal_linear,
                conformal_quadratic,
            } => {
                let a = spd(coefficients, "coefficients")?;
                let n = a.nrows();
                let linear = match conformal_linear {
                    Some(c) if c.len() != n => {
                        return Err(FinslerError::DimensionMismatch { expected: n, got: c.len() })
                    }
                    Some(c) => DVector::from_column_slice(c),
                    None => DVector::zeros(n),
                };
                if !conformal_quadratic.is_finite() {
                    return Err(FinslerError::InvalidParameter("conformal_quadratic must be finite".into()));
                }
                let potential = if linear.iter().all(|v| *v == 0.0) && *conformal_quadratic == 0.0 {
                    Potential::Zero
                } else {
                    Potential::Quadratic {
                        linear,
                        quadratic: *conformal_quadratic,
                    }
                };
                (PatchSpec::unbounded(n), Model::Conformal { a, potential })
            }
            MetricFamily::Randers {
                drift,
                coefficients,
                drift_gradient,
            } => {
                let n = drift.len();
                if n == 0 || drift.iter().any(|v| !v.is_finite()) {
                    return Err(FinslerError::InvalidParameter("drift must be a finite non-empty vector".into()));
                }
                let a = match coefficients {
                    Some(rows) => spd(rows, "coefficients")?,
                    None => DMatrix::identity(n, n),
                };
                let grad = match drift_gradient {
                    Some(rows) => matrix(rows, "drift_gradient")?,
                    None => DMatrix::zeros(n, n),
                };
                if a.nrows() != n || grad.nrows() != n {
                    return Err(FinslerError::DimensionMismatch { expected: n, got: a.nrows().max(grad.nrows()) });
                }
                let b0 = DVector::from_column_slice(drift);
                let b0_norm = b0.dot(&a.clone().cholesky().expect("spd checked").solve(&b0)).sqrt();
                if b0_norm >= 1.0 {
                    return Err(FinslerError::InvalidParameter(format!(
                        "drift norm {b0_norm} at the origin must be below 1"
                    )));
                }
                (
                    PatchSpec::unbounded(n),
                    Model::Randers { a, b0, grad },
                )
            }
            MetricFamily::HyperbolicHalfPlane { dim, scale } => {
                if *dim < 2 || !(*scale > 0.0 && scale.is_finite()) {
                    return Err(FinslerError::InvalidParameter("half-space needs dim >= 2 and scale > 0".into()));
                }
                let mut bounds = vec![Interval::UNBOUNDED; *dim];
                bounds[dim - 1] = Interval::above(0.0);
                (
                    PatchSpec::boxed(bounds),
                    Model::Conformal {
                        a: DMatrix::identity(*dim, *dim),
                        potential: Potential::HalfSpace { ln_scale: scale.ln() },
                    },
                )
            }
            MetricFamily::RoundSpherePatch {
                dim,
                radius,
                chart_radius,
            } => {
                if !(*radius > 0.0 && radius.is_finite() && *chart_radius > 0.0) {
                    return Err(FinslerError::InvalidParameter("sphere radius and chart radius must be positive".into()));
                }
                (
                    PatchSpec::ball(*dim, *chart_radius),
                    Model::Conformal {
                        a: DMatrix::identity(*dim, *dim),
                        potential: Potential::Stereographic {
                            ln_two_r: (2.0 * radius).ln(),
                        },
                    },
                )
            }
        };
        patch.validate()?;
        let reversible = match &model {
            Model::Randers { b0, grad, .. } => b0.iter().chain(grad.iter()).all(|v| *v == 0.0),
            _ => true,
        };
        Ok(FinslerMetric {
            family,
            patch,
            model,
            reversible,
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(MetricFamily::Euclidean { dim }).expect("valid euclidean")
    }

    pub fn minkowski_norm(dim: usize, kappa: f64) -> Result<Self> {
        Self::new(MetricFamily::MinkowskiNorm { dim, kappa })
    }

    /// Flat Randers metric `|y| + <b, y>`.
    pub fn randers_flat(drift: &[f64]) -> Self {
        Self::new(MetricFamily::Randers {
            drift: drift.to_vec(),
            coefficients: None,
            drift_gradient: None,
        })
        .expect("valid randers")
    }

    pub fn randers(a: &DMatrix<f64>, drift: &[f64], drift_gradient: &DMatrix<f64>) -> Result<Self> {
        Self::new(MetricFamily::Randers {
            drift: drift.to_vec(),
            coefficients: Some(to_rows(a)),
            drift_gradient: Some(to_rows(drift_gradient)),
        })
    }

    pub fn riemannian(a: &DMatrix<f64>, linear: &[f64], quadratic: f64) -> Result<Self> {
        Self::new(MetricFamily::Riemannian {
            coefficients: to_rows(a),
            conformal_linear: Some(linear.to_vec()),
            conformal_quadratic: quadratic,
        })
    }

    pub fn hyperbolic() -> Self {
        Self::new(MetricFamily::HyperbolicHalfPlane { dim: 2, scale: 1.0 }).expect("valid half-plane")
    }

    pub fn sphere() -> Self {
        Self::new(MetricFamily::RoundSpherePatch {
            dim: 2,
            radius: 1.0,
            chart_radius: default_chart_radius(),
        })
        .expect("valid sphere patch")
    }

    pub fn family(&self) -> &MetricFamily {
        &self.family
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    pub fn dim(&self) -> usize {
        self.patch.dim
    }

    pub fn patch(&self) -> &PatchSpec {
        &self.patch
    }

    /// Declared reversibility; [`validate_finsler`] compares it with samples.
    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    /// True when `F` does not depend on the base point.
    pub fn is_flat_model(&self) -> bool {
        match &self.model {
            Model::Conformal { potential, .. } => *potential == Potential::Zero,
            Model::Randers { grad, .. } => grad.iter().all(|v| *v == 0.0),
            Model::Quartic { .. } => true,
        }
    }

    /// Box used for drawing sample base points.
    pub fn sampling_region(&self) -> SamplingRegion {
        let n = self.dim();
        match &self.family {
            MetricFamily::HyperbolicHalfPlane { .. } => {
                let mut lo = vec![-1.0; n];
                let mut hi = vec![1.0; n];
                lo[n - 1] = 0.5;
                hi[n - 1] = 2.0;
                SamplingRegion { lo, hi }
            }
            MetricFamily::RoundSpherePatch { chart_radius, .. } => {
                SamplingRegion::cube(n, 0.7f64.min(0.5 * chart_radius / (n as f64).sqrt()))
            }
            _ => SamplingRegion::cube(n, 1.0),
        }
    }

    /// Fails unless `x` is a valid interior point.
    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        self.patch.require_interior(x.as_slice(), BOUNDARY_MARGIN)
    }

    fn check_vector(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.dim() {
            return Err(FinslerError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(FinslerError::Numeric("non-finite tangent vector".into()));
        }
        Ok(())
    }

    /// Drift covector `b(x)` of a Randers metric.
    pub fn drift_at(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        match &self.model {
            Model::Randers { b0, grad, .. } => Some(b0 + grad * x),
            _ => None,
        }
    }

    /// Norm `|b(x)|_a` of the Randers drift against the quadratic part;
    /// values `>= 1` break positivity and ellipticity.
    pub fn drift_norm(&self, x: &DVector<f64>) -> Option<f64> {
        match &self.model {
            Model::Randers { a, .. } => {
                let b = self.drift_at(x)?;
                let ainv_b = a.clone().cholesky()?.solve(&b);
                Some(b.dot(&ainv_b).max(0.0).sqrt())
            }
            _ => None,
        }
    }

    /// `F(x, y)`; zero for `y = 0`.
    pub fn evaluate_f(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.check_point(x)?;
        self.check_vector(y)?;
        Ok(self.f_unchecked(x, y))
    }

    fn f_unchecked(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match &self.model {
            Model::Conformal { a, potential } => {
                let q = y.dot(&(a * y));
                if q <= 0.0 {
                    return 0.0;
                }
                potential.eval(x).0.exp() * q.sqrt()
            }
            Model::Randers { a, b0, grad } => {
                let alpha = y.dot(&(a * y)).max(0.0).sqrt();
                alpha + (b0 + grad * x).dot(y)
            }
            Model::Quartic { kappa } => {
                let n2 = y.norm_squared();
                let q: f64 = y.iter().map(|v| v.powi(4)).sum::<f64>() + kappa * n2 * n2;
                q.sqrt().sqrt()
            }
        }
    }

    /// Closed-form jet of `F`. Refuses `y = 0`.
    pub fn jet(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<Jet> {
        self.check_point(x)?;
        self.check_vector(y)?;
        if y.iter().all(|v| *v == 0.0) {
            return Err(FinslerError::Singularity("F is not differentiable at the zero vector".into()));
        }
        let n = self.dim();
        let jet = match &self.model {
            Model::Conformal { a, potential } => {
                let (phi, dphi) = potential.eval(x);
                let s = phi.exp();
                let ay = a * y;
                let alpha = y.dot(&ay).sqrt();
                let f = s * alpha;
                let f_y = &ay * (s / alpha);
                let f_yy = (a / alpha - &ay * ay.transpose() / (alpha * alpha * alpha)) * s;
                let f_xy = &dphi * f_y.transpose();
                Jet {
                    f,
                    f_x: dphi * f,
                    f_y,
                    f_yy,
                    f_xy,
                }
            }
            Model::Randers { a, b0, grad } => {
                let b = b0 + grad * x;
                let ay = a * y;
                let alpha = y.dot(&ay).sqrt();
                Jet {
                    f: alpha + b.dot(y),
                    f_x: grad.tr_mul(y),
                    f_y: &ay / alpha + b,
                    f_yy: a / alpha - &ay * ay.transpose() / (alpha * alpha * alpha),
                    f_xy: grad.transpose(),
                }
            }
            Model::Quartic { kappa } => {
                let n2 = y.norm_squared();
                let q: f64 = y.iter().map(|v| v.powi(4)).sum::<f64>() + kappa * n2 * n2;
                let f = q.sqrt().sqrt();
                let dq = DVector::from_fn(n, |i, _| 4.0 * y[i].powi(3) + 4.0 * kappa * n2 * y[i]);
                let mut qyy = (DMatrix::identity(n, n) * n2 + y * y.transpose() * 2.0) * (4.0 * kappa);
                for i in 0..n {
                    qyy[(i, i)] += 12.0 * y[i] * y[i];
                }
                let f3 = f * f * f;
                let f_y = dq / (4.0 * f3);
                let f_yy = qyy / (4.0 * f3) - &f_y * f_y.transpose() * (3.0 / f);
                Jet {
                    f,
                    f_x: DVector::zeros(n),
                    f_y,
                    f_yy,
                    f_xy: DMatrix::zeros(n, n),
                }
            }
        };
        Ok(jet)
    }

    /// Closed-form energy jet. Quadratic families are evaluated directly so
    /// the fundamental tensor is exactly `y`-independent.
    pub fn energy_jet(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<EnergyJet> {
        match &self.model {
            Model::Conformal { a, potential } => {
                self.check_point(x)?;
                self.check_vector(y)?;
                if y.iter().all(|v| *v == 0.0) {
                    return Err(FinslerError::Singularity("energy jet at the zero vector".into()));
                }
                let (phi, dphi) = potential.eval(x);
                let s2 = (2.0 * phi).exp();
                let ay = a * y;
                let e = 0.5 * s2 * y.dot(&ay);
                let e_y = ay * s2;
                Ok(EnergyJet {
                    e,
                    e_x: &dphi * (2.0 * e),
                    e_xy: &dphi * e_y.transpose() * 2.0,
                    e_y,
                    e_yy: a * s2,
                })
            }
            _ => Ok(self.jet(x, y)?.energy()),
        }
    }

    /// Fundamental tensor `g = (F^2 / 2)_yy`; refuses `y = 0`.
    pub fn fundamental_tensor(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.energy_jet(x, y)?.e_yy;
        Ok((&g + g.transpose()) * 0.5)
    }

    /// Jet of `F` from central differences of `F` only. Position steps scale
    /// with `1 + |x|`, velocity steps with `|y|`.
    pub fn fd_jet(&self, x: &DVector<f64>, y: &DVector<f64>, cfg: &DiffConfig) -> Result<Jet> {
        cfg.validate()?;
        self.check_point(x)?;
        self.check_vector(y)?;
        let n = self.dim();
        let ymag = y.amax();
        if ymag == 0.0 {
            return Err(FinslerError::Singularity("F is not differentiable at the zero vector".into()));
        }
        let xmag = x.amax();
        let levels = cfg.richardson_levels;
        let reach = cfg.reach_factor();
        // Keep every stencil point inside the patch.
        let room = self.patch.boundary_distance(x.as_slice()) - BOUNDARY_MARGIN;
        let hx = cfg.step_at(xmag).min(0.5 * room / reach);
        let hx2 = cfg.second_step_at(xmag).min(0.5 * room / reach);
        let hy = cfg.fd_step * ymag;
        let hy2 = cfg.fd_step.powf(0.75) * ymag;
        if !(hx > 0.0) {
            return Err(FinslerError::domain(x.as_slice(), "too close to the patch boundary for differencing"));
        }

        // F as a function of z = (x, y)
        let fz = |z: &DVector<f64>| -> Result<f64> {
            let xs = z.rows(0, n).into_owned();
            let ys = z.rows(n, n).into_owned();
            self.evaluate_f(&xs, &ys)
        };
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(x);
        z.rows_mut(n, n).copy_from(y);
        let unit = |i: usize| DVector::from_fn(2 * n, |k, _| if k == i { 1.0 } else { 0.0 });
        let scalar = |z: &DVector<f64>| fz(z).map(|s| DVector::from_element(1, s));

        let f = fz(&z)?;
        let mut f_x = DVector::zeros(n);
        let mut f_y = DVector::zeros(n);
        for k in 0..n {
            f_x[k] = central_difference_vec(scalar, &z, &unit(k), hx, levels)?[0];
            f_y[k] = central_difference_vec(scalar, &z, &unit(n + k), hy, levels)?[0];
        }
        let mut f_yy = DMatrix::zeros(n, n);
        let mut f_xy = DMatrix::zeros(n, n);
        for k in 0..n {
            for l in 0..n {
                if l >= k {
                    let d = second_derivative(fz, &z, &unit(n + k), &unit(n + l), hy2, hy2, levels)?;
                    f_yy[(k, l)] = d;
                    f_yy[(l, k)] = d;
                }
                f_xy[(k, l)] = second_derivative(fz, &z, &unit(k), &unit(n + l), hx2, hy2, levels)?;
            }
        }
        Ok(Jet {
            f,
            f_x,
            f_y,
            f_yy,
            f_xy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn curved_randers() -> FinslerMetric {
        FinslerMetric::randers(
            &DMatrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.9]),
            &[0.2, -0.1],
            &DMatrix::from_row_slice(2, 2, &[0.1, 0.05, -0.08, 0.12]),
        )
        .unwrap()
    }

    fn all_families() -> Vec<FinslerMetric> {
        vec![
            FinslerMetric::euclidean(2),
            FinslerMetric::minkowski_norm(2, 1.0).unwrap(),
            FinslerMetric::riemannian(&DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]), &[0.2, -0.1], 0.15)
                .unwrap(),
            FinslerMetric::randers_flat(&[0.5, 0.0]),
            curved_randers(),
            FinslerMetric::hyperbolic(),
            FinslerMetric::sphere(),
        ]
    }

    #[test]
    fn evaluate_examples() {
        let e = FinslerMetric::euclidean(2);
        assert_eq!(e.evaluate_f(&v(&[7.0, -1.0]), &v(&[3.0, 4.0])).unwrap(), 5.0);
        let r = FinslerMetric::randers_flat(&[0.5, 0.0]);
        assert_relative_eq!(r.evaluate_f(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), 1.5);
        assert_relative_eq!(r.evaluate_f(&v(&[0.0, 0.0]), &v(&[-1.0, 0.0])).unwrap(), 0.5);
        let h = FinslerMetric::hyperbolic();
        assert_relative_eq!(h.evaluate_f(&v(&[0.0, 2.0]), &v(&[0.0, 1.0])).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(e.evaluate_f(&v(&[0.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn oversized_drift_is_refused() {
        let bad = MetricFamily::Randers { drift: vec![1.0, 0.0], coefficients: None, drift_gradient: None };
        assert!(matches!(FinslerMetric::new(bad), Err(FinslerError::InvalidParameter(_))));
        let wide = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        assert!(FinslerMetric::randers(&wide, &[1.5, 0.0], &DMatrix::zeros(2, 2)).is_ok());
    }

    #[test]
    fn outside_patch_is_domain_error() {
        let h = FinslerMetric::hyperbolic();
        assert!(h.evaluate_f(&v(&[0.0, -1.0]), &v(&[1.0, 0.0])).unwrap_err().is_domain());
        let s = FinslerMetric::sphere();
        assert!(s.evaluate_f(&v(&[25.0, 0.0]), &v(&[1.0, 0.0])).unwrap_err().is_domain());
    }

    #[test]
    fn fundamental_tensor_examples() {
        let e = FinslerMetric::euclidean(2);
        assert_eq!(e.fundamental_tensor(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), DMatrix::identity(2, 2));
        assert!(matches!(
            e.fundamental_tensor(&v(&[0.0, 0.0]), &v(&[0.0, 0.0])),
            Err(FinslerError::Singularity(_))
        ));

        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let riem = FinslerMetric::riemannian(&a, &[0.0, 0.0], 0.0).unwrap();
        for y in [v(&[1.0, 0.0]), v(&[-0.3, 2.0]), v(&[5.0, 5.0])] {
            assert_relative_eq!(riem.fundamental_tensor(&v(&[0.4, 0.1]), &y).unwrap(), a, epsilon = 1e-15);
        }
    }

    /// Randers tensor against `g = (F/alpha)(I - yy^T/alpha^2) + (y/alpha + b)(y/alpha + b)^T`,
    /// whose 2D determinant is `(F/alpha)^3`.
    #[test]
    fn randers_tensor_closed_form() {
        let r = FinslerMetric::randers_flat(&[0.5, 0.0]);
        let b = v(&[0.5, 0.0]);
        for y in [v(&[0.0, 1.0]), v(&[1.0, 0.0]), v(&[-0.4, 0.7]), v(&[3.0, -2.0])] {
            let alpha = y.norm();
            let f = alpha + b.dot(&y);
            let yh = &y / alpha;
            let l = &yh + &b;
            let expected = (DMatrix::identity(2, 2) - &yh * yh.transpose()) * (f / alpha) + &l * l.transpose();
            let g = r.fundamental_tensor(&v(&[0.0, 0.0]), &y).unwrap();
            assert_relative_eq!(g, expected, epsilon = 1e-13);
            assert_relative_eq!(g.determinant(), (f / alpha).powi(3), epsilon = 1e-13);
            assert!(g.determinant() > 0.0 && g[(0, 0)] > 0.0);
        }
        // y = (0, 1): F = alpha = 1, g = [[1.25, 0.5], [0.5, 1]]
        let g = r.fundamental_tensor(&v(&[0.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
        assert_relative_eq!(g, DMatrix::from_row_slice(2, 2, &[1.25, 0.5, 0.5, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn closed_form_jets_match_finite_differences() {
        let cfg = DiffConfig::default();
        let pts = [
            (v(&[0.3, 0.8]), v(&[0.6, -0.2])),
            (v(&[-0.5, 1.4]), v(&[-2.0, 3.0])),
            (v(&[0.1, 0.6]), v(&[0.01, 0.02])),
        ];
        for m in all_families() {
            for (x, y) in &pts {
                let exact = m.jet(x, y).unwrap();
                let fd = m.fd_jet(x, y, &cfg).unwrap();
                let scale = exact.f.abs();
                let ys = y.amax();
                assert_relative_eq!(fd.f, exact.f, max_relative = 1e-14);
                assert!((&fd.f_x - &exact.f_x).amax() < 1e-8 * scale, "{} f_x", m.name());
                assert!((&fd.f_y - &exact.f_y).amax() < 1e-8 * scale / ys, "{} f_y", m.name());
                assert!((&fd.f_yy - &exact.f_yy).amax() < 1e-6 * scale / (ys * ys), "{} f_yy", m.name());
                assert!((&fd.f_xy - &exact.f_xy).amax() < 1e-6 * scale / ys, "{} f_xy", m.name());
            }
        }
    }

    #[test]
    fn energy_jet_matches_chain_rule() {
        for m in all_families() {
            let (x, y) = (v(&[0.2, 0.9]), v(&[-0.7, 0.4]));
            let direct = m.energy_jet(&x, &y).unwrap();
            let chained = m.jet(&x, &y).unwrap().energy();
            assert_relative_eq!(direct.e, chained.e, max_relative = 1e-13);
            assert_relative_eq!(direct.e_yy, chained.e_yy, epsilon = 1e-12);
            assert_relative_eq!(direct.e_xy, chained.e_xy, epsilon = 1e-12);
            assert_relative_eq!(direct.e_x, chained.e_x, epsilon = 1e-12);
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let json = r#"{"family":"randers","drift":[0.5,0.0]}"#;
        let fam: MetricFamily = serde_json::from_str(json).unwrap();
        let m = FinslerMetric::new(fam.clone()).unwrap();
        assert!(!m.is_reversible());
        assert!(m.is_flat_model());
        let back: MetricFamily = serde_json::from_str(&serde_json::to_string(&fam).unwrap()).unwrap();
        assert_eq!(back, fam);
        let h: MetricFamily = serde_json::from_str(r#"{"family":"hyperbolic-half-plane"}"#).unwrap();
        assert_eq!(FinslerMetric::new(h).unwrap().dim(), 2);
        assert!(serde_json::from_str::<MetricFamily>(r#"{"family":"klein"}"#).is_err());
    }

    #[test]
    fn drift_norm_reports_bound() {
        let id = DMatrix::identity(2, 2);
        let r = FinslerMetric::randers(&id, &[0.6, 0.0], &(&id * 0.5)).unwrap();
        assert_relative_eq!(r.drift_norm(&v(&[0.0, 0.0])).unwrap(), 0.6);
        assert_relative_eq!(r.drift_norm(&v(&[1.2, 0.0])).unwrap(), 1.2);
        assert!(FinslerMetric::euclidean(2).drift_norm(&v(&[0.0, 0.0])).is_none());
    }
}
