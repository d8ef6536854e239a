//! Geodesics of the canonical spray, the exponential map, emanating points
//! and a numerical normal-radius estimate.

pub mod ode;
mod emanating;
mod normal;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::metrics::FinslerMetric;
use crate::numcore::{serde_vec, ChartPoint};
use crate::spray::{Spray, SprayField};
use ode::{dop853, OdeOptions, OdeSolution, Termination};

pub use emanating::{default_delta, emanating_point, EmanatingPoint};
pub use normal::{normal_radius, normal_radius_with, NormalRadiusEstimate, NormalRadiusOptions};

/// Default integrator tolerance for paths.
pub const PATH_TOL: f64 = 1e-9;
/// Tolerance used by the exponential map; tight enough that finite
/// differences of `exp` stay clean.
pub const EXP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    #[serde(with = "serde_vec")]
    pub x: DVector<f64>,
    #[serde(with = "serde_vec")]
    pub xdot: DVector<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub tolerance: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
}

/// Where the path stopped short of the requested span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchExitFlag {
    /// Last time reached inside the patch.
    pub t: f64,
    pub requested: f64,
}

/// Solution of `x'' = -2 G(x, x')` with `x(0) = p`, `x'(0) = v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub p: DVector<f64>,
    pub v: DVector<f64>,
    pub requested: (f64, f64),
    pub t_minus: f64,
    pub t_plus: f64,
    /// Accepted integrator mesh in increasing `t`.
    pub samples: Vec<PathSample>,
    pub stats: IntegratorStats,
    pub exit: Option<PatchExitFlag>,
    forward: Option<OdeSolution>,
    backward: Option<OdeSolution>,
}

fn split(z: &DVector<f64>, n: usize) -> (DVector<f64>, DVector<f64>) {
    (z.rows(0, n).into_owned(), z.rows(n, n).into_owned())
}

fn rhs<'a>(s: &'a dyn Spray) -> impl FnMut(f64, &DVector<f64>) -> Result<DVector<f64>> + 'a {
    let n = s.dim();
    move |_t, z| {
        let (x, y) = split(z, n);
        let g = s.coefficients(&x, &y)?;
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&y);
        out.rows_mut(n, n).copy_from(&(g * -2.0));
        Ok(out)
    }
}

fn initial_state(s: &dyn Spray, p: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let n = s.dim();
    if p.len() != n || v.len() != n {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: if p.len() != n { p.len() } else { v.len() },
        });
    }
    if v.iter().all(|c| *c == 0.0) {
        return Err(FinslerError::Degenerate("geodesic with zero initial velocity".into()));
    }
    s.metric().check_point(p)?;
    let mut z = DVector::zeros(2 * n);
    z.rows_mut(0, n).copy_from(p);
    z.rows_mut(n, n).copy_from(v);
    Ok(z)
}

/// Integrates a geodesic of an arbitrary spray over `t_span = (t-, t+)`,
/// `t- <= 0 <= t+`. Leaving the patch truncates the path and sets `exit`.
pub fn integrate_spray(
    s: &dyn Spray,
    p: &DVector<f64>,
    v: &DVector<f64>,
    t_span: (f64, f64),
    tol: f64,
) -> Result<GeodesicPath> {
    let (lo, hi) = t_span;
    if !(lo <= 0.0 && hi >= 0.0) {
        return Err(FinslerError::InvalidParameter(format!("time span ({lo}, {hi}) must contain 0")));
    }
    let z0 = initial_state(s, p, v)?;
    let n = s.dim();
    let opts = OdeOptions::with_tol(tol);
    let forward = if hi > 0.0 { Some(dop853(rhs(s), 0.0, &z0, hi, &opts)?) } else { None };
    let backward = if lo < 0.0 { Some(dop853(rhs(s), 0.0, &z0, lo, &opts)?) } else { None };

    let mut samples = Vec::new();
    let mut stats = IntegratorStats {
        tolerance: tol,
        ..Default::default()
    };
    let mut exit = None;
    let push = |sol: &OdeSolution, samples: &mut Vec<PathSample>, skip_first: bool| {
        for (t, z) in sol.ts.iter().zip(&sol.ys).skip(usize::from(skip_first)) {
            let (x, xdot) = split(z, n);
            samples.push(PathSample { t: *t, x, xdot });
        }
    };
    let mut t_minus = 0.0;
    let mut t_plus = 0.0;
    if let Some(b) = &backward {
        push(b, &mut samples, true);
        samples.reverse();
        t_minus = b.t_end();
        if let Termination::DomainExit { t } = b.termination {
            exit = Some(PatchExitFlag { t, requested: lo });
        }
        stats.steps += b.stats.accepted_steps;
        stats.rejected_steps += b.stats.rejected_steps + b.stats.domain_rejections;
        stats.rhs_evals += b.stats.rhs_evals;
    }
    samples.push(PathSample {
        t: 0.0,
        x: p.clone(),
        xdot: v.clone(),
    });
    if let Some(f) = &forward {
        push(f, &mut samples, true);
        t_plus = f.t_end();
        if let Termination::DomainExit { t } = f.termination {
            exit = Some(PatchExitFlag { t, requested: hi });
        }
        stats.steps += f.stats.accepted_steps;
        stats.rejected_steps += f.stats.rejected_steps + f.stats.domain_rejections;
        stats.rhs_evals += f.stats.rhs_evals;
    }
    Ok(GeodesicPath {
        p: p.clone(),
        v: v.clone(),
        requested: t_span,
        t_minus,
        t_plus,
        samples,
        stats,
        exit,
        forward,
        backward,
    })
}

/// Geodesic of the canonical spray of `m`.
pub fn integrate_geodesic(
    m: &FinslerMetric,
    p: &DVector<f64>,
    v: &DVector<f64>,
    t_span: (f64, f64),
    tol: f64,
) -> Result<GeodesicPath> {
    integrate_spray(&SprayField::new(m.clone()), p, v, t_span, tol)
}

impl GeodesicPath {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn is_truncated(&self) -> bool {
        self.exit.is_some()
    }

    /// `(x(t), x'(t))` from the dense output.
    pub fn state_at(&self, t: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        if t == 0.0 {
            return Ok((self.p.clone(), self.v.clone()));
        }
        let sol = if t > 0.0 { &self.forward } else { &self.backward };
        let z = sol
            .as_ref()
            .and_then(|s| s.eval(t))
            .ok_or(FinslerError::PatchExit {
                t: if t > 0.0 { self.t_plus } else { self.t_minus },
                target: t,
            })?;
        Ok(split(&z, self.dim()))
    }

    pub fn position_at(&self, t: f64) -> Result<DVector<f64>> {
        Ok(self.state_at(t)?.0)
    }

    pub fn velocity_at(&self, t: f64) -> Result<DVector<f64>> {
        Ok(self.state_at(t)?.1)
    }

    /// Largest relative change of `F(x, x')` over the mesh and `extra`
    /// interpolation points per step.
    pub fn speed_drift(&self, m: &FinslerMetric, extra: usize) -> Result<f64> {
        let f0 = m.evaluate_f(&self.p, &self.v)?;
        let mut worst = 0.0f64;
        for w in self.samples.windows(2) {
            for k in 0..=extra {
                let t = w[0].t + (w[1].t - w[0].t) * k as f64 / (extra + 1) as f64;
                let (x, xd) = self.state_at(t)?;
                worst = worst.max((m.evaluate_f(&x, &xd)? - f0).abs() / f0);
            }
        }
        if let Some(last) = self.samples.last() {
            worst = worst.max((m.evaluate_f(&last.x, &last.xdot)? - f0).abs() / f0);
        }
        Ok(worst)
    }

    /// CSV with header `t,x1..xn,xdot1..xdotn`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("xdot{i}")));
        w.write_record(&header).map_err(table_err)?;
        for s in &self.samples {
            let mut row = vec![s.t];
            row.extend(s.x.iter());
            row.extend(s.xdot.iter());
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(table_err)?;
        }
        w.flush().map_err(|e| FinslerError::Table(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| FinslerError::Table(e.to_string()))
    }
}

pub(crate) fn table_err(e: csv::Error) -> FinslerError {
    FinslerError::Table(e.to_string())
}

/// Endpoint `(x(t), x'(t))` of a geodesic without dense output.
pub fn geodesic_state(
    m: &FinslerMetric,
    p: &DVector<f64>,
    v: &DVector<f64>,
    t: f64,
    tol: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let s = SprayField::new(m.clone());
    let z0 = initial_state(&s, p, v)?;
    let opts = OdeOptions {
        dense: false,
        ..OdeOptions::with_tol(tol)
    };
    let sol = dop853(rhs(&s), 0.0, &z0, t, &opts)?;
    if let Termination::DomainExit { t: reached } = sol.termination {
        return Err(FinslerError::PatchExit { t: reached, target: t });
    }
    Ok(split(sol.y_end(), m.dim()))
}

/// `exp_p(v) = gamma_v(1)`; `exp_p(0) = p`.
pub fn exponential(m: &FinslerMetric, p: &DVector<f64>, v: &DVector<f64>) -> Result<ChartPoint> {
    exponential_with_tol(m, p, v, EXP_TOL)
}

pub fn exponential_with_tol(m: &FinslerMetric, p: &DVector<f64>, v: &DVector<f64>, tol: f64) -> Result<ChartPoint> {
    if v.iter().all(|c| *c == 0.0) {
        m.check_point(p)?;
        return Ok(ChartPoint::new(p.clone()));
    }
    Ok(ChartPoint::new(geodesic_state(m, p, v, 1.0, tol)?.0))
}

/// `|gamma_{tv}(s) - gamma_v(st)|` from two independent integrations.
pub fn rescaling_defect(m: &FinslerMetric, p: &DVector<f64>, v: &DVector<f64>, t: f64, s: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(FinslerError::InvalidParameter("rescaling factor t must be positive".into()));
    }
    let a = geodesic_state(m, p, &(v * t), s, EXP_TOL)?.0;
    let b = geodesic_state(m, p, v, s * t, EXP_TOL)?.0;
    Ok((a - b).norm())
}

/// One-sided difference quotient of `v -> exp_p(v)` at `v = 0` with one
/// Richardson step, `2 D(h/2) - D(h)`.
pub fn exp_derivative_at_zero(m: &FinslerMetric, p: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let d = |h: f64| -> Result<DVector<f64>> { Ok((exponential(m, p, &(&e * h))?.into_inner() - p) / h) };
        let col = d(0.5 * h)? * 2.0 - d(h)?;
        out.set_column(j, &col);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn euclidean_lines() {
        let m = FinslerMetric::euclidean(2);
        let path = integrate_geodesic(&m, &v(&[0.0, 0.0]), &v(&[1.0, 2.0]), (0.0, 1.0), PATH_TOL).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            assert_relative_eq!(path.position_at(t).unwrap(), v(&[t, 2.0 * t]), epsilon = 1e-12);
        }
        assert_relative_eq!(
            exponential(&m, &v(&[1.0, 1.0]), &v(&[2.0, 0.0])).unwrap().into_inner(),
            v(&[3.0, 1.0]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn hyperbolic_vertical_ray() {
        let m = FinslerMetric::hyperbolic();
        let p = v(&[0.0, 1.0]);
        let path = integrate_geodesic(&m, &p, &v(&[0.0, 1.0]), (-1.0, 1.0), PATH_TOL).unwrap();
        for t in [-1.0, -0.3, 0.4, 1.0] {
            assert_relative_eq!(path.position_at(t).unwrap(), v(&[0.0, f64::exp(t)]), epsilon = 1e-8);
        }
        assert!(path.speed_drift(&m, 3).unwrap() < 1e-6);
        let e = exponential(&m, &p, &v(&[0.0, 1.0])).unwrap();
        assert_relative_eq!(e[1], std::f64::consts::E, epsilon = 1e-10);
    }

    #[test]
    fn flat_randers_lines() {
        let m = FinslerMetric::randers_flat(&[0.5, 0.0]);
        let path = integrate_geodesic(&m, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), (0.0, 2.0), PATH_TOL).unwrap();
        assert_relative_eq!(path.position_at(2.0).unwrap(), v(&[2.0, 0.0]), epsilon = 1e-12);
    }

    /// Quarter great circle from the origin of the stereographic chart ends
    /// at chart radius tan(pi/4) = 1.
    #[test]
    fn sphere_quarter_circle() {
        let m = FinslerMetric::sphere();
        let p = v(&[0.0, 0.0]);
        let u = v(&[1.0, 0.0]);
        let f = m.evaluate_f(&p, &u).unwrap();
        let e = exponential(&m, &p, &(u * (std::f64::consts::FRAC_PI_2 / f))).unwrap();
        assert_relative_eq!(e.into_inner(), v(&[1.0, 0.0]), epsilon = 1e-10);
    }

    #[test]
    fn patch_exit_truncates_path() {
        let m = FinslerMetric::hyperbolic();
        let s = FinslerMetric::new(crate::metrics::MetricFamily::RoundSpherePatch {
            dim: 2,
            radius: 1.0,
            chart_radius: 2.0,
        })
        .unwrap();
        let path = integrate_geodesic(&s, &v(&[0.0, 0.0]), &v(&[2.0, 0.0]), (0.0, 3.0), PATH_TOL).unwrap();
        let exit = path.exit.expect("must leave the ball");
        assert!(exit.t < 3.0 && path.t_plus == exit.t);
        assert!(path.state_at(2.9).is_err());
        assert!(matches!(
            exponential(&s, &v(&[0.0, 0.0]), &v(&[6.0, 0.0])),
            Err(FinslerError::PatchExit { .. })
        ));
        assert!(integrate_geodesic(&m, &v(&[0.0, 1.0]), &v(&[0.0, 0.0]), (0.0, 1.0), PATH_TOL).is_err());
    }

    #[test]
    fn rescaling_examples() {
        let h = FinslerMetric::hyperbolic();
        assert!(rescaling_defect(&h, &v(&[0.0, 1.0]), &v(&[0.0, 1.0]), 2.0, 0.5).unwrap() < 1e-8);
        let r = FinslerMetric::randers_flat(&[0.5, 0.0]);
        assert!(rescaling_defect(&r, &v(&[0.0, 0.0]), &v(&[0.3, 0.7]), 3.0, 1.0 / 3.0).unwrap() < 1e-8);
        let e = FinslerMetric::euclidean(2);
        assert!(rescaling_defect(&e, &v(&[0.2, 0.0]), &v(&[1.0, -1.0]), 0.7, 0.4).unwrap() < 1e-14);
    }

    #[test]
    fn exp_derivative_is_identity_at_zero() {
        let h = FinslerMetric::hyperbolic();
        let d = exp_derivative_at_zero(&h, &v(&[0.3, 1.2]), 1e-3).unwrap();
        assert_relative_eq!(d, DMatrix::identity(2, 2), epsilon = 1e-4);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let m = FinslerMetric::euclidean(2);
        let path = integrate_geodesic(&m, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), (-0.5, 0.5), PATH_TOL).unwrap();
        let csv = path.to_csv_string().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,x2,xdot1,xdot2");
        assert_eq!(lines.count(), path.samples.len());
        assert!(path.samples.windows(2).all(|w| w[0].t < w[1].t));
    }
}
