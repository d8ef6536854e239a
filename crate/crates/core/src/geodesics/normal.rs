//! Heuristic normal-radius estimate.
//!
//! A radius `r` is accepted when shooting recovers `r u / F(u)` from
//! `exp_p(r u / F(u))` for every direction of a fixed fan. This certifies
//! nothing between the fan directions.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::exponential;
use crate::distance::{default_tol, invert_exp};
use crate::error::{FinslerError, Result};
use crate::metrics::FinslerMetric;
use crate::numcore::sampling::{seeded_rng, unit_direction};
use crate::numcore::serde_vec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalRadiusOptions {
    /// Seeded directions added to the `±e_i` fan.
    pub random_directions: usize,
    pub seed: u64,
    /// Bisection stops once `(hi - lo) / lo` drops below this.
    pub rel_precision: f64,
    /// Halvings of `cap` tried before giving up.
    pub max_halvings: u32,
    /// Relative agreement required between the recovered and the probed
    /// initial vector.
    pub recovery_tol: f64,
}

impl Default for NormalRadiusOptions {
    fn default() -> Self {
        NormalRadiusOptions {
            random_directions: 8,
            seed: 0x5eed,
            rel_precision: 1e-2,
            max_halvings: 20,
            recovery_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalRadiusEstimate {
    #[serde(with = "serde_vec")]
    pub center: DVector<f64>,
    pub radius: f64,
    pub cap: f64,
    /// True when `cap` itself passed.
    pub capped: bool,
    /// Radii probed, in order, with their outcome.
    pub probes: Vec<(f64, bool)>,
    pub method: String,
}

fn fan(m: &FinslerMetric, p: &DVector<f64>, opts: &NormalRadiusOptions) -> Result<Vec<DVector<f64>>> {
    let n = m.dim();
    let mut dirs = Vec::with_capacity(2 * n + opts.random_directions);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[i] = s;
            dirs.push(e);
        }
    }
    let mut rng = seeded_rng(opts.seed);
    dirs.extend((0..opts.random_directions).map(|_| unit_direction(&mut rng, n)));
    dirs.into_iter()
        .map(|u| {
            let f = m.evaluate_f(p, &u)?;
            Ok(u / f)
        })
        .collect()
}

fn passes(m: &FinslerMetric, p: &DVector<f64>, dirs: &[DVector<f64>], r: f64, opts: &NormalRadiusOptions) -> Result<bool> {
    for u in dirs {
        let v = u * r;
        let q = match exponential(m, p, &v) {
            Ok(q) => q.into_inner(),
            Err(FinslerError::PatchExit { .. } | FinslerError::StepUnderflow { .. } | FinslerError::Numeric(_)) => {
                return Ok(false)
            }
            Err(e) if e.is_domain() => return Ok(false),
            Err(e) => return Err(e),
        };
        if m.check_point(&q).is_err() {
            return Ok(false);
        }
        match invert_exp(m, p, &q, default_tol(&q)) {
            Ok(res) if (&res.v - &v).norm() <= opts.recovery_tol * v.norm() => {}
            Ok(_) | Err(FinslerError::InversionFailure { .. }) => return Ok(false),
            Err(e) if e.is_domain() => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

pub fn normal_radius(m: &FinslerMetric, p: &DVector<f64>, cap: f64) -> Result<NormalRadiusEstimate> {
    normal_radius_with(m, p, cap, &NormalRadiusOptions::default())
}

/// Largest probed `r <= cap` at which the target fan inverts: `cap` first,
/// then halvings until a pass, then bisection between the last pass and
/// the first failure.
pub fn normal_radius_with(
    m: &FinslerMetric,
    p: &DVector<f64>,
    cap: f64,
    opts: &NormalRadiusOptions,
) -> Result<NormalRadiusEstimate> {
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(FinslerError::InvalidParameter(format!("cap must be positive, got {cap}")));
    }
    m.check_point(p)?;
    let dirs = fan(m, p, opts)?;
    let mut probes = Vec::new();
    let mut probe = |r: f64| -> Result<bool> {
        let ok = passes(m, p, &dirs, r, opts)?;
        probes.push((r, ok));
        Ok(ok)
    };

    let method = format!(
        "shooting fan of {} directions, halving then bisection to {} relative",
        dirs.len(),
        opts.rel_precision
    );
    if probe(cap)? {
        return Ok(NormalRadiusEstimate {
            center: p.clone(),
            radius: cap,
            cap,
            capped: true,
            probes,
            method,
        });
    }
    let mut hi = cap;
    let mut lo = None;
    for _ in 0..opts.max_halvings {
        let r = 0.5 * hi;
        if probe(r)? {
            lo = Some(r);
            break;
        }
        hi = r;
    }
    let Some(mut lo) = lo else {
        return Err(FinslerError::Degenerate(format!(
            "shooting fails on every probed sphere down to radius {:e}",
            hi
        )));
    };
    while (hi - lo) / lo > opts.rel_precision {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(NormalRadiusEstimate {
        center: p.clone(),
        radius: lo,
        cap,
        capped: false,
        probes,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn flat_metrics_reach_the_cap() {
        let e = normal_radius(&FinslerMetric::euclidean(2), &v(&[0.0, 0.0]), 10.0).unwrap();
        assert_eq!(e.radius, 10.0);
        assert!(e.capped);
        let r = normal_radius(&FinslerMetric::randers_flat(&[0.5, 0.0]), &v(&[0.0, 0.0]), 10.0).unwrap();
        assert_eq!(r.radius, 10.0);
    }

    #[test]
    fn hyperbolic_reaches_the_cap() {
        let e = normal_radius(&FinslerMetric::hyperbolic(), &v(&[0.0, 1.0]), 5.0).unwrap();
        assert_eq!(e.radius, 5.0);
    }

    #[test]
    fn sphere_stays_below_pi() {
        let e = normal_radius(&FinslerMetric::sphere(), &v(&[0.0, 0.0]), 10.0).unwrap();
        assert!(!e.capped);
        assert!(e.radius < PI && e.radius > 1.0, "{e:?}");
    }

    #[test]
    fn rejects_bad_cap() {
        assert!(normal_radius(&FinslerMetric::euclidean(2), &v(&[0.0, 0.0]), 0.0).is_err());
    }
}
