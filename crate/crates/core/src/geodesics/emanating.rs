use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{geodesic_state, normal_radius, EXP_TOL};
use crate::error::{FinslerError, Result};
use crate::metrics::FinslerMetric;
use crate::numcore::{serde_vec, ChartPoint};

const MAX_RETRIES: usize = 6;

/// A point `q = gamma_v(-delta)` together with `w = lambda gamma_v'(-delta)`,
/// so that `t -> exp_q(t w)` runs through `p` at `t = delta / lambda` with
/// velocity `lambda v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmanatingPoint {
    pub q: ChartPoint,
    #[serde(with = "serde_vec")]
    pub w: DVector<f64>,
    pub lambda: f64,
    /// The backward time actually used (after any halving).
    pub delta: f64,
    /// Normal-radius estimate at `q` that fixed `lambda`.
    pub radius_at_q: f64,
    /// `|exp_q((delta / lambda) w) - p|`.
    pub position_error: f64,
    /// Relative error of the velocity at `p` against `lambda v`.
    pub velocity_error: f64,
    pub retries: usize,
}

impl EmanatingPoint {
    /// Parameter at which `exp_q(t w)` passes through `p`.
    pub fn return_time(&self) -> f64 {
        self.delta / self.lambda
    }
}

/// `0.1` times the normal-radius estimate at `p`.
pub fn default_delta(m: &FinslerMetric, p: &DVector<f64>, cap: f64) -> Result<f64> {
    Ok(0.1 * normal_radius(m, p, cap)?.radius)
}

/// Integrates the geodesic of `v` backwards for `delta`; `delta` is halved
/// (at most six times) when that leaves the patch.
pub fn emanating_point(m: &FinslerMetric, p: &DVector<f64>, v: &DVector<f64>, delta: f64) -> Result<EmanatingPoint> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(FinslerError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let mut delta = delta;
    let mut retries = 0;
    let (q, qdot) = loop {
        match geodesic_state(m, p, v, -delta, EXP_TOL) {
            Ok(state) => break state,
            Err(FinslerError::PatchExit { .. }) if retries < MAX_RETRIES => {
                delta *= 0.5;
                retries += 1;
            }
            Err(e) => return Err(e),
        }
    };
    let speed = m.evaluate_f(&q, &qdot)?;
    let r_q = normal_radius(m, &q, 2.0 * delta * speed)?.radius;
    let lambda = (0.9 * r_q / (delta * speed)).min(1.0);
    let w = &qdot * lambda;

    let (back, back_dot) = geodesic_state(m, &q, &w, delta / lambda, EXP_TOL)?;
    let target_velocity = v * lambda;
    Ok(EmanatingPoint {
        q: ChartPoint::new(q),
        w,
        lambda,
        delta,
        radius_at_q: r_q,
        position_error: (back - p).norm(),
        velocity_error: (back_dot - &target_velocity).norm() / target_velocity.norm(),
        retries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn euclidean_example() {
        let e = emanating_point(&FinslerMetric::euclidean(2), &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 0.5).unwrap();
        assert_relative_eq!(e.q.coords().clone(), v(&[-0.5, 0.0]), epsilon = 1e-12);
        assert_eq!(e.lambda, 1.0);
        assert_relative_eq!(e.w, v(&[1.0, 0.0]), epsilon = 1e-12);
        assert!(e.position_error < 1e-7);
    }

    #[test]
    fn hyperbolic_vertical_ray() {
        let e = emanating_point(&FinslerMetric::hyperbolic(), &v(&[0.0, 1.0]), &v(&[0.0, 1.0]), 0.3).unwrap();
        assert_relative_eq!(e.q.coords().clone(), v(&[0.0, (-0.3f64).exp()]), epsilon = 1e-9);
        assert!(e.position_error < 1e-7);
        assert!(e.velocity_error < 1e-6);
    }

    #[test]
    fn randers_uses_backward_time() {
        let e = emanating_point(&FinslerMetric::randers_flat(&[0.5, 0.0]), &v(&[0.0, 0.0]), &v(&[0.0, 1.0]), 0.2)
            .unwrap();
        assert_relative_eq!(e.q.coords().clone(), v(&[0.0, -0.2]), epsilon = 1e-12);
    }

    #[test]
    fn halves_delta_on_patch_exit() {
        // chart radius 2 is reached at distance 2 atan 2 ~ 2.21
        let m = FinslerMetric::new(crate::metrics::MetricFamily::RoundSpherePatch {
            dim: 2,
            radius: 1.0,
            chart_radius: 2.0,
        })
        .unwrap();
        let e = emanating_point(&m, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 3.0).unwrap();
        assert!(e.retries > 0 && e.delta < 3.0);
        assert!(e.position_error < 1e-7);
    }
}
