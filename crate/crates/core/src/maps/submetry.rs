//! Scalar submetries `r: M -> R` on reversible metrics.
//!
//! A submetry maps metric balls onto intervals of the same radius. Its
//! differential at `q` is pinned between `f_a(u) = r(a) + rho(a, u)` and
//! `f_b(u) = r(b) - rho(u, b)` for `a, b` on the sphere `S(q, delta)` with
//! `r(a) = r(q) - delta` and `r(b) = r(q) + delta`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::isometry::direction_fan;
use crate::distance::distance;
use crate::distchart::radial_gradient;
use crate::error::{FinslerError, Result};
use crate::geodesics::exponential;
use crate::metrics::FinslerMetric;
use crate::numcore::sampling::{seeded_rng, unit_direction};
use crate::numcore::{gradient, serde_vec, DiffConfig};

const REVERSIBILITY_TOL: f64 = 1e-12;
const FIBER_TOL: f64 = 1e-6;
const COARSE_DIRECTIONS: usize = 64;
const GOLDEN_ITERATIONS: usize = 60;

type ScalarFn = dyn Fn(&DVector<f64>) -> Result<f64> + Send + Sync;

#[derive(Clone)]
pub struct SubmetryProbe {
    pub name: String,
    pub metric: FinslerMetric,
    r: Arc<ScalarFn>,
    /// Largest ball radius the probe is meant to be used with.
    pub delta: f64,
}

impl fmt::Debug for SubmetryProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubmetryProbe")
            .field("name", &self.name)
            .field("metric", &self.metric.name())
            .field("delta", &self.delta)
            .finish()
    }
}

/// `(F(y), F(-y))` for the most asymmetric fan vector at the region center.
fn asymmetry_witness(m: &FinslerMetric) -> Result<(f64, f64)> {
    let x = m.sampling_region().center();
    let mut worst = (0.0, 0.0, -1.0);
    for y in direction_fan(m.dim(), 16, 0xa5) {
        let (f, b) = (m.evaluate_f(&x, &y)?, m.evaluate_f(&x, &(-&y))?);
        let gap = (f - b).abs() / f.max(b);
        if gap > worst.2 {
            worst = (f, b, gap);
        }
    }
    Ok((worst.0, worst.1))
}

impl SubmetryProbe {
    /// Refuses metrics that are not reversible, by declaration or on a
    /// sampled fan.
    pub fn new<R>(name: impl Into<String>, metric: FinslerMetric, r: R, delta: f64) -> Result<Self>
    where
        R: Fn(&DVector<f64>) -> Result<f64> + Send + Sync + 'static,
    {
        let (forward, backward) = asymmetry_witness(&metric)?;
        let sampled_gap = (forward - backward).abs() / forward.max(backward);
        if !metric.is_reversible() || sampled_gap > REVERSIBILITY_TOL {
            return Err(FinslerError::NonReversible { forward, backward });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(FinslerError::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        Ok(SubmetryProbe {
            name: name.into(),
            metric,
            r: Arc::new(r),
            delta,
        })
    }

    /// `r = rho(p, .)`.
    pub fn distance_function(metric: FinslerMetric, p: &DVector<f64>, delta: f64) -> Result<Self> {
        metric.check_point(p)?;
        let m = metric.clone();
        let p = p.clone();
        Self::new("distance-function", metric, move |x| distance(&m, &p, x), delta)
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        (self.r)(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallImage {
    pub center_value: f64,
    pub epsilon: f64,
    pub min: f64,
    pub max: f64,
    /// Every sampled value lies in `]r(q) - eps, r(q) + eps[`.
    pub containment: bool,
    /// Both interval ends are approached to within `coverage_tol`.
    pub coverage: bool,
    pub coverage_tol: f64,
    pub samples: usize,
    /// Samples lost to patch exit.
    pub dropped: usize,
    #[serde(with = "serde_vec")]
    pub argmin: DVector<f64>,
    #[serde(with = "serde_vec")]
    pub argmax: DVector<f64>,
}

/// Expected worst gap between the sampled extremes and the interval ends
/// for uniform sampling of a ball: the extremes sit in caps of volume
/// fraction `~ (gap / eps)^((n + 1) / 2)`.
pub fn coverage_tolerance(epsilon: f64, samples: usize, dim: usize) -> f64 {
    epsilon * (16.0 / samples as f64).powf(2.0 / (dim as f64 + 1.0))
}

/// Samples `r` on `B(q, eps)` through `exp_q(s u / F(u))` with
/// `s = eps U^(1/n)` and reports the sampled image interval.
pub fn submetry_ball_image(sp: &SubmetryProbe, q: &DVector<f64>, epsilon: f64, n_samples: usize, seed: u64) -> Result<BallImage> {
    if !(epsilon > 0.0 && epsilon < sp.delta) {
        return Err(FinslerError::InvalidParameter(format!(
            "epsilon {epsilon} outside (0, {})",
            sp.delta
        )));
    }
    if n_samples == 0 {
        return Err(FinslerError::InvalidParameter("need at least one sample".into()));
    }
    let m = &sp.metric;
    m.check_point(q)?;
    let n = m.dim();
    let rq = sp.eval(q)?;
    let mut rng = seeded_rng(seed);
    let mut out = BallImage {
        center_value: rq,
        epsilon,
        min: rq,
        max: rq,
        containment: true,
        coverage: false,
        coverage_tol: coverage_tolerance(epsilon, n_samples, n),
        samples: 0,
        dropped: 0,
        argmin: q.clone(),
        argmax: q.clone(),
    };
    for _ in 0..n_samples {
        let u = unit_direction(&mut rng, n);
        let u = &u / m.evaluate_f(q, &u)?;
        let s = epsilon * rng.random::<f64>().powf(1.0 / n as f64);
        let x = match exponential(m, q, &(u * s)) {
            Ok(x) => x.into_inner(),
            Err(FinslerError::PatchExit { .. }) => {
                out.dropped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let val = sp.eval(&x)?;
        out.samples += 1;
        if !(val > rq - epsilon && val < rq + epsilon) {
            out.containment = false;
        }
        if val < out.min {
            out.min = val;
            out.argmin = x.clone();
        }
        if val > out.max {
            out.max = val;
            out.argmax = x;
        }
    }
    out.coverage = out.min <= rq - epsilon + out.coverage_tol && out.max >= rq + epsilon - out.coverage_tol;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmetryDifferential {
    pub delta: f64,
    pub center_value: f64,
    /// Point of `S(q, delta)` with `r(a) = r(q) - delta`.
    #[serde(with = "serde_vec")]
    pub a: DVector<f64>,
    #[serde(with = "serde_vec")]
    pub b: DVector<f64>,
    pub r_a: f64,
    pub r_b: f64,
    #[serde(with = "serde_vec")]
    pub grad_a: DVector<f64>,
    #[serde(with = "serde_vec")]
    pub grad_b: DVector<f64>,
    /// `(grad_a + grad_b) / 2`.
    #[serde(with = "serde_vec")]
    pub gradient: DVector<f64>,
    /// `|grad_a - grad_b|`.
    pub residual: f64,
    /// Central-difference gradient of `r` itself.
    #[serde(with = "serde_vec")]
    pub direct_gradient: DVector<f64>,
    /// `|gradient - direct_gradient|`.
    pub direct_residual: f64,
}

fn sphere_point(m: &FinslerMetric, q: &DVector<f64>, u: &DVector<f64>, delta: f64) -> Result<Option<DVector<f64>>> {
    let u = u / u.norm();
    let v = &u * (delta / m.evaluate_f(q, &u)?);
    match exponential(m, q, &v) {
        Ok(x) => Ok(Some(x.into_inner())),
        Err(FinslerError::PatchExit { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn lex_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    a.iter().zip(b.iter()).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}

/// Extremum of `sign * r` over `S(q, delta)`: seeded sweep, then golden
/// section along arcs `cos t u + sin t e` for an orthonormal complement of
/// the best direction, two sweeps.
fn fiber_search(
    sp: &SubmetryProbe,
    q: &DVector<f64>,
    delta: f64,
    sign: f64,
    dirs: &[DVector<f64>],
) -> Result<(DVector<f64>, f64)> {
    let m = &sp.metric;
    let objective = |u: &DVector<f64>| -> Result<Option<(DVector<f64>, f64)>> {
        Ok(match sphere_point(m, q, u, delta)? {
            Some(x) => {
                let val = sign * sp.eval(&x)?;
                Some((x, val))
            }
            None => None,
        })
    };
    let mut best: Option<(DVector<f64>, DVector<f64>, f64)> = None;
    for u in dirs {
        if let Some((x, val)) = objective(u)? {
            let better = match &best {
                None => true,
                Some((_, bx, bv)) => val < *bv || (val == *bv && lex_less(&x, bx)),
            };
            if better {
                best = Some((u / u.norm(), x, val));
            }
        }
    }
    let (mut u, mut x, mut val) = best.ok_or_else(|| FinslerError::NotASubmetry {
        scale: delta,
        reason: "every sphere sample left the patch".into(),
    })?;
    let n = m.dim();
    let width = 2.0 * std::f64::consts::PI / dirs.len() as f64 * 1.5;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..2 {
        let complement = crate::numcore::null_space_basis(std::slice::from_ref(&u), n, 1e-12)?;
        for e in complement {
            let arc = |t: f64| &u * t.cos() + &e * t.sin();
            let f = |t: f64| -> Result<f64> { Ok(objective(&arc(t))?.map_or(f64::INFINITY, |(_, v)| v)) };
            let (mut lo, mut hi) = (-width, width);
            let mut c = hi - g * (hi - lo);
            let mut d = lo + g * (hi - lo);
            let (mut fc, mut fd) = (f(c)?, f(d)?);
            for _ in 0..GOLDEN_ITERATIONS {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - g * (hi - lo);
                    fc = f(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + g * (hi - lo);
                    fd = f(d)?;
                }
            }
            let t = 0.5 * (lo + hi);
            if let Some((xt, vt)) = objective(&arc(t))? {
                if vt < val {
                    u = arc(t);
                    u /= u.norm();
                    x = xt;
                    val = vt;
                }
            }
        }
    }
    Ok((x, sign * val))
}

/// Differential of a submetry at `q` from the sandwich functions at scale
/// `delta`; fails when no point of `S(q, delta)` reaches `r(q) -+ delta`.
pub fn submetry_differential(sp: &SubmetryProbe, q: &DVector<f64>, delta: f64, seed: u64) -> Result<SubmetryDifferential> {
    if !(delta > 0.0 && delta <= sp.delta) {
        return Err(FinslerError::InvalidParameter(format!("delta {delta} outside (0, {}]", sp.delta)));
    }
    let m = &sp.metric;
    m.check_point(q)?;
    let n = m.dim();
    let rq = sp.eval(q)?;
    let mut rng = seeded_rng(seed);
    let mut dirs = direction_fan(n, 0, 0);
    dirs.extend((0..COARSE_DIRECTIONS).map(|_| unit_direction(&mut rng, n)));

    let (a, r_a) = fiber_search(sp, q, delta, 1.0, &dirs)?;
    let (b, r_b) = fiber_search(sp, q, delta, -1.0, &dirs)?;
    for (label, got, want) in [("r(q) - delta", r_a, rq - delta), ("r(q) + delta", r_b, rq + delta)] {
        if !((got - want).abs() < FIBER_TOL) {
            return Err(FinslerError::NotASubmetry {
                scale: delta,
                reason: format!("sphere sup/inf of r is {got}, expected {label} = {want}"),
            });
        }
    }
    let grad_a = radial_gradient(m, &a, q)?;
    let grad_b = -radial_gradient(m, &b, q)?;
    let gradient_avg = (&grad_a + &grad_b) * 0.5;
    let cfg = DiffConfig {
        fd_step: 1e-4,
        richardson_levels: 2,
    };
    let direct = gradient(|x| sp.eval(x), q, &cfg)?;
    Ok(SubmetryDifferential {
        delta,
        center_value: rq,
        residual: (&grad_a - &grad_b).norm(),
        direct_residual: (&gradient_avg - &direct).norm(),
        a,
        b,
        r_a,
        r_b,
        grad_a,
        grad_b,
        gradient: gradient_avg,
        direct_gradient: direct,
    })
}

impl SubmetryDifferential {
    /// Worst violation of `f_b <= r <= f_a` on seeded points of
    /// `B(q, radius)`, and the larger of `|f_a(q) - r(q)|`, `|f_b(q) - r(q)|`.
    pub fn sandwich(&self, sp: &SubmetryProbe, q: &DVector<f64>, radius: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
        let m = &sp.metric;
        let f_a = |u: &DVector<f64>| -> Result<f64> { Ok(self.r_a + distance(m, &self.a, u)?) };
        let f_b = |u: &DVector<f64>| -> Result<f64> { Ok(self.r_b - distance(m, u, &self.b)?) };
        let at_q = (f_a(q)? - self.center_value).abs().max((f_b(q)? - self.center_value).abs());
        let mut rng = seeded_rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let u = unit_direction(&mut rng, m.dim());
            let s: f64 = radius * rng.random::<f64>();
            let x = q + &u * (s / m.evaluate_f(q, &u)?);
            let r = sp.eval(&x)?;
            worst = worst.max(f_b(&x)? - r).max(r - f_a(&x)?);
        }
        Ok((worst, at_q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn randers_is_refused() {
        let r = FinslerMetric::randers_flat(&[0.5, 0.0]);
        let err = SubmetryProbe::distance_function(r, &v(&[0.0, 0.0]), 0.5).unwrap_err();
        match err {
            FinslerError::NonReversible { forward, backward } => {
                assert_relative_eq!((forward - backward).abs(), 1.0, epsilon = 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn euclidean_ball_image() {
        let sp = SubmetryProbe::distance_function(FinslerMetric::euclidean(2), &v(&[0.0, 0.0]), 0.5).unwrap();
        let img = submetry_ball_image(&sp, &v(&[1.0, 0.0]), 0.25, 4000, 1).unwrap();
        assert!(img.containment && img.coverage, "{img:?}");
        assert_relative_eq!(img.min, 0.75, epsilon = 0.01);
        assert_relative_eq!(img.max, 1.25, epsilon = 0.01);
    }

    #[test]
    fn square_is_not_a_submetry() {
        let e = FinslerMetric::euclidean(2);
        let sp = SubmetryProbe::new("square", e, |x: &DVector<f64>| Ok(x[0] * x[0]), 1.0).unwrap();
        let img = submetry_ball_image(&sp, &v(&[0.0, 0.0]), 0.25, 500, 2).unwrap();
        assert!(!img.coverage);
        assert!(submetry_differential(&sp, &v(&[0.0, 0.0]), 0.1, 3).is_err());
    }

    #[test]
    fn euclidean_differentials() {
        let sp = SubmetryProbe::distance_function(FinslerMetric::euclidean(2), &v(&[0.0, 0.0]), 0.5).unwrap();
        let d = submetry_differential(&sp, &v(&[1.0, 0.0]), 0.1, 4).unwrap();
        assert_relative_eq!(d.gradient, v(&[1.0, 0.0]), epsilon = 1e-3);
        assert!(d.residual < 1e-3);
        let d = submetry_differential(&sp, &v(&[3.0, 4.0]), 0.1, 4).unwrap();
        assert_relative_eq!(d.gradient, v(&[0.6, 0.8]), epsilon = 1e-3);
        let (viol, at_q) = d.sandwich(&sp, &v(&[3.0, 4.0]), 0.05, 20, 5).unwrap();
        assert!(viol <= 1e-9 && at_q <= 1e-9, "{viol} {at_q}");
    }

    #[test]
    fn hyperbolic_differential_matches_direct() {
        let h = FinslerMetric::hyperbolic();
        let sp = SubmetryProbe::distance_function(h, &v(&[0.0, 1.0]), 0.5).unwrap();
        let q = v(&[0.0, std::f64::consts::E]);
        let d = submetry_differential(&sp, &q, 0.1, 6).unwrap();
        assert!(d.residual < 1e-3 && d.direct_residual < 1e-3, "{d:?}");
        // vertical ray: r = ln x2 there
        assert_relative_eq!(d.direct_gradient, v(&[0.0, 1.0 / std::f64::consts::E]), epsilon = 1e-6);
    }
}
