//! Local Finslerian distance through inversion of the exponential map.
//!
//! `rho(p, q) = F(p, exp_p^{-1}(q))` on a normal neighbourhood of `p`. The
//! inverse is found by Newton shooting; nothing here attempts a global
//! infimum over curves.

mod arc;
mod oracle;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::geodesics::exponential;
use crate::metrics::FinslerMetric;
use crate::numcore::sampling::{seeded_rng, unit_direction};
use crate::numcore::{serde_vec, ChartPoint};

pub use arc::{arc_length, Curve, ParametricCurve, Polyline};
pub use oracle::{quasimetric_audit, DistanceTable, Provenance, QuasiMetricOracle, TableRow};

pub const MAX_NEWTON_ITERATIONS: usize = 25;

/// Output of [`invert_exp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    #[serde(with = "serde_vec")]
    pub v: DVector<f64>,
    pub iterations: usize,
    /// `|exp_p(v) - q|`.
    pub residual: f64,
    /// Target-continuation steps used when plain Newton from the default
    /// guess failed; 0 otherwise.
    pub continuation_steps: usize,
}

/// Default shooting tolerance for a target `q`.
pub fn default_tol(q: &DVector<f64>) -> f64 {
    1e-11 * (1.0 + q.amax())
}

fn exp_residual(m: &FinslerMetric, p: &DVector<f64>, v: &DVector<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(exponential(m, p, v)?.into_inner() - q)
}

/// Central-difference Jacobian of `v -> exp_p(v)`.
fn exp_jacobian(m: &FinslerMetric, p: &DVector<f64>, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let h = 1e-6 * (1.0 + v.amax());
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = h;
        let plus = exponential(m, p, &(v + &e))?.into_inner();
        let minus = exponential(m, p, &(v - &e))?.into_inner();
        jac.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    Ok(jac)
}

fn failure(iterations: usize, residual: f64) -> FinslerError {
    FinslerError::InversionFailure {
        iterations,
        residual,
    }
}

/// Newton with backtracking on `|exp_p(v) - q|`.
fn newton(
    m: &FinslerMetric,
    p: &DVector<f64>,
    q: &DVector<f64>,
    v0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<ShootingResult> {
    let mut v = v0.clone();
    let mut r = match exp_residual(m, p, &v, q) {
        Ok(r) => r,
        Err(e) if is_soft(&e) => return Err(failure(0, f64::INFINITY)),
        Err(e) => return Err(e),
    };
    let mut rn = r.norm();
    for it in 0..=max_iter {
        if rn < tol {
            return Ok(ShootingResult {
                v,
                iterations: it,
                residual: rn,
                continuation_steps: 0,
            });
        }
        if it == max_iter {
            break;
        }
        let jac = match exp_jacobian(m, p, &v) {
            Ok(j) => j,
            Err(e) if is_soft(&e) => return Err(failure(it, rn)),
            Err(e) => return Err(e),
        };
        let dv = jac.lu().solve(&(-&r)).ok_or_else(|| failure(it, rn))?;
        if !dv.iter().all(|c| c.is_finite()) {
            return Err(failure(it, rn));
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = &v + &dv * alpha;
            match exp_residual(m, p, &trial, q) {
                Ok(rt) => {
                    let rtn = rt.norm();
                    if rtn < (1.0 - 1e-4 * alpha) * rn {
                        v = trial;
                        r = rt;
                        rn = rtn;
                        accepted = true;
                        break;
                    }
                }
                Err(e) if is_soft(&e) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(failure(it + 1, rn));
        }
    }
    Err(failure(max_iter, rn))
}

/// Errors that only mean "this trial vector is not usable".
fn is_soft(e: &FinslerError) -> bool {
    matches!(
        e,
        FinslerError::PatchExit { .. }
            | FinslerError::Domain { .. }
            | FinslerError::StepUnderflow { .. }
            | FinslerError::Singularity(_)
            | FinslerError::Numeric(_)
    )
}

/// Follows the branch of `exp_p^{-1}` along the chart segment
/// `p + s (q - p)`, `s: 0 -> 1`, with an extrapolating predictor.
fn continuation(m: &FinslerMetric, p: &DVector<f64>, q: &DVector<f64>, tol: f64) -> Result<ShootingResult> {
    let dq = q - p;
    let mut s = 0.0f64;
    let mut v = DVector::zeros(m.dim());
    let mut prev: Option<(f64, DVector<f64>)> = None;
    let mut ds = 0.125;
    let mut steps = 0usize;
    let mut iterations = 0usize;
    while s < 1.0 {
        if steps > 400 || ds < 1e-5 {
            return Err(failure(iterations, f64::NAN));
        }
        let s_new = (s + ds).min(1.0);
        let target = p + &dq * s_new;
        let guess = match &prev {
            Some((s_prev, v_prev)) => &v + (&v - v_prev) * ((s_new - s) / (s - s_prev)),
            None => &dq * s_new,
        };
        steps += 1;
        match newton(m, p, &target, &guess, default_tol(&target).max(tol), 8) {
            Ok(res) => {
                iterations += res.iterations;
                prev = Some((s, v));
                v = res.v;
                s = s_new;
                if res.iterations <= 3 {
                    ds *= 1.5;
                }
            }
            Err(FinslerError::InversionFailure { .. }) => ds *= 0.5,
            Err(e) => return Err(e),
        }
    }
    // polish at the true tolerance
    let mut res = newton(m, p, q, &v, tol, MAX_NEWTON_ITERATIONS)?;
    res.iterations += iterations;
    res.continuation_steps = steps;
    Ok(res)
}

/// `exp_p^{-1}(q)` by Newton shooting from `v0 = q - p`, falling back to
/// target continuation along the chart segment when that diverges.
pub fn invert_exp(m: &FinslerMetric, p: &DVector<f64>, q: &DVector<f64>, tol: f64) -> Result<ShootingResult> {
    invert_exp_from(m, p, q, &(q - p), tol)
}

/// As [`invert_exp`] with an explicit initial guess.
pub fn invert_exp_from(
    m: &FinslerMetric,
    p: &DVector<f64>,
    q: &DVector<f64>,
    v0: &DVector<f64>,
    tol: f64,
) -> Result<ShootingResult> {
    if !(tol > 0.0) {
        return Err(FinslerError::InvalidParameter("shooting tolerance must be positive".into()));
    }
    if p.len() != m.dim() || q.len() != m.dim() || v0.len() != m.dim() {
        return Err(FinslerError::DimensionMismatch {
            expected: m.dim(),
            got: q.len(),
        });
    }
    m.check_point(p)?;
    m.check_point(q)?;
    if p == q {
        return Ok(ShootingResult {
            v: DVector::zeros(m.dim()),
            iterations: 0,
            residual: 0.0,
            continuation_steps: 0,
        });
    }
    match newton(m, p, q, v0, tol, MAX_NEWTON_ITERATIONS) {
        Ok(r) => Ok(r),
        Err(FinslerError::InversionFailure { .. }) => continuation(m, p, q, tol),
        Err(e) => Err(e),
    }
}

/// `rho(p, q)` on a normal neighbourhood of `p`.
pub fn distance(m: &FinslerMetric, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
    Ok(distance_with(m, p, q, None)?.0)
}

/// Distance plus the shooting vector; `warm` seeds Newton.
pub fn distance_with(
    m: &FinslerMetric,
    p: &DVector<f64>,
    q: &DVector<f64>,
    warm: Option<&DVector<f64>>,
) -> Result<(f64, ShootingResult)> {
    let tol = default_tol(q);
    let res = match warm {
        Some(v0) => invert_exp_from(m, p, q, v0, tol)?,
        None => invert_exp(m, p, q, tol)?,
    };
    let d = m.evaluate_f(p, &res.v)?;
    Ok((d, res))
}

/// Points of the forward sphere `S(p, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereSample {
    pub points: Vec<ChartPoint>,
    /// F-unit initial velocities, one per point.
    #[serde(with = "crate::numcore::serde_vecs")]
    pub directions: Vec<DVector<f64>>,
    /// Samples lost to patch exit.
    pub dropped: usize,
}

/// `exp_p(r u / F(u))` for seeded Euclidean-uniform directions `u`.
pub fn sphere_sample(m: &FinslerMetric, p: &DVector<f64>, r: f64, count: usize, seed: u64) -> Result<SphereSample> {
    if !(r > 0.0) {
        return Err(FinslerError::InvalidParameter("sphere radius must be positive".into()));
    }
    m.check_point(p)?;
    let mut rng = seeded_rng(seed);
    let mut out = SphereSample {
        points: Vec::with_capacity(count),
        directions: Vec::with_capacity(count),
        dropped: 0,
    };
    for _ in 0..count {
        let u = unit_direction(&mut rng, m.dim());
        let u = &u / m.evaluate_f(p, &u)?;
        match exponential(m, p, &(&u * r)) {
            Ok(x) => {
                out.points.push(x);
                out.directions.push(u);
            }
            Err(FinslerError::PatchExit { .. }) => out.dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Limit of `rho(a(0), a(t)) / t` as `t -> 0+`, from `t_k = t0 2^-k`,
/// `k = 0..=levels`, and a one-sided Richardson table.
pub fn busemann_mayer_f<A>(rho: &QuasiMetricOracle, alpha: A, t0: f64, levels: usize) -> Result<f64>
where
    A: Fn(f64) -> DVector<f64>,
{
    if !(t0 > 0.0) {
        return Err(FinslerError::InvalidParameter("base step must be positive".into()));
    }
    let a0 = alpha(0.0);
    let mut prev: Vec<f64> = Vec::new();
    for k in 0..=levels {
        let t = t0 / 2f64.powi(k as i32);
        let q = rho.eval(&a0, &alpha(t))? / t;
        if !q.is_finite() {
            return Err(FinslerError::Numeric(format!("oracle returned a non-finite value at t = {t}")));
        }
        let mut row = vec![q];
        for j in 1..=k {
            let factor = 2f64.powi(j as i32) - 1.0;
            let next = row[j - 1] + (row[j - 1] - prev[j - 1]) / factor;
            row.push(next);
        }
        prev = row;
    }
    Ok(*prev.last().expect("levels >= 0"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn hyperbolic_closed_form(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
        (1.0 + (p - q).norm_squared() / (2.0 * p[1] * q[1])).acosh()
    }

    #[test]
    fn shooting_examples() {
        let e = FinslerMetric::euclidean(2);
        let r = invert_exp(&e, &v(&[0.0, 0.0]), &v(&[3.0, 4.0]), 1e-10).unwrap();
        assert_relative_eq!(r.v, v(&[3.0, 4.0]), epsilon = 1e-10);

        let ra = FinslerMetric::randers_flat(&[0.5, 0.0]);
        let r = invert_exp(&ra, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 1e-10).unwrap();
        assert_relative_eq!(r.v, v(&[1.0, 0.0]), epsilon = 1e-10);

        let h = FinslerMetric::hyperbolic();
        let r = invert_exp(&h, &v(&[0.0, 1.0]), &v(&[0.0, std::f64::consts::E]), 1e-11).unwrap();
        assert_relative_eq!(r.v, v(&[0.0, 1.0]), epsilon = 1e-8);
        assert!(r.residual < 1e-11);
    }

    #[test]
    fn distance_examples() {
        let e = FinslerMetric::euclidean(2);
        assert_relative_eq!(distance(&e, &v(&[0.0, 0.0]), &v(&[3.0, 4.0])).unwrap(), 5.0, epsilon = 1e-10);
        let ra = FinslerMetric::randers_flat(&[0.5, 0.0]);
        assert_relative_eq!(distance(&ra, &v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), 1.5, epsilon = 1e-10);
        assert_relative_eq!(distance(&ra, &v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 0.5, epsilon = 1e-10);
        let h = FinslerMetric::hyperbolic();
        assert_relative_eq!(
            distance(&h, &v(&[0.0, 1.0]), &v(&[0.0, std::f64::consts::E])).unwrap(),
            1.0,
            epsilon = 1e-9
        );
        let (p, q) = (v(&[-0.3, 0.8]), v(&[0.9, 1.7]));
        assert_relative_eq!(distance(&h, &p, &q).unwrap(), hyperbolic_closed_form(&p, &q), epsilon = 1e-9);
        assert_eq!(distance(&h, &p, &p).unwrap(), 0.0);
    }

    #[test]
    fn far_targets_need_continuation() {
        let h = FinslerMetric::hyperbolic();
        let p = v(&[0.0, 1.0]);
        let q = v(&[0.0, 5f64.exp()]);
        let r = invert_exp(&h, &p, &q, default_tol(&q)).unwrap();
        assert!(r.continuation_steps > 0);
        assert_relative_eq!(r.v, v(&[0.0, 5.0]), epsilon = 1e-7);
    }

    #[test]
    fn sphere_samples_lie_on_sphere() {
        let ra = FinslerMetric::randers_flat(&[0.5, 0.0]);
        let s = sphere_sample(&ra, &v(&[0.0, 0.0]), 1.0, 12, 5).unwrap();
        assert_eq!(s.points.len(), 12);
        for x in &s.points {
            // |y| + 0.5 y1 = 1
            assert_relative_eq!(x.norm() + 0.5 * x[0], 1.0, epsilon = 1e-10);
        }
        let h = FinslerMetric::hyperbolic();
        let p = v(&[0.0, 1.0]);
        for x in &sphere_sample(&h, &p, 1.0, 8, 6).unwrap().points {
            assert_relative_eq!(hyperbolic_closed_form(&p, x), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn busemann_mayer_examples() {
        let e = QuasiMetricOracle::from_metric(FinslerMetric::euclidean(2));
        let f = busemann_mayer_f(&e, |t| v(&[t, t]), 1e-2, 4).unwrap();
        assert_relative_eq!(f, 2f64.sqrt(), epsilon = 1e-4);
        let ra = QuasiMetricOracle::from_metric(FinslerMetric::randers_flat(&[0.5, 0.0]));
        assert_relative_eq!(busemann_mayer_f(&ra, |t| v(&[t, 0.0]), 1e-2, 4).unwrap(), 1.5, epsilon = 1e-4);
        let h = QuasiMetricOracle::from_metric(FinslerMetric::hyperbolic());
        assert_relative_eq!(busemann_mayer_f(&h, |t| v(&[t, 1.0]), 1e-2, 4).unwrap(), 1.0, epsilon = 1e-3);
        let bad = QuasiMetricOracle::from_fn(2, true, |_, _| Ok(f64::NAN));
        assert!(matches!(busemann_mayer_f(&bad, |t| v(&[t, 0.0]), 1e-2, 2), Err(FinslerError::Numeric(_))));
    }
}
