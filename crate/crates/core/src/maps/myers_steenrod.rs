//! Recovering the derivative of a distance-preserving map from point values.
//!
//! With a distance chart `theta_bar` at `phi(p)` built from base points
//! `q_i` and `p_i = phi^{-1}(q_i)`, distance preservation gives
//! `theta_bar o phi = (r_{p_1}, .., r_{p_n})`, so near `p` the map equals
//! `theta_bar^{-1} o (r_{p_1}, .., r_{p_n})`, a composition of smooth maps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::isometry::direction_fan;
use super::MapProbe;
use crate::distance::{busemann_mayer_f, default_tol, distance, invert_exp, invert_exp_from, QuasiMetricOracle};
use crate::distchart::{build_distance_chart, DistanceChart};
use crate::error::{FinslerError, Result};
use crate::numcore::sampling::{seeded_rng, unit_direction};
use crate::numcore::{central_difference_vec, serde_mat, serde_vec, serde_vecs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MyersSteenrodOptions {
    pub seed: u64,
    pub audit_pairs: usize,
    /// Allowed `|rho_bar(phi a, phi b) - rho(a, b)| / (1 + rho(a, b))`.
    pub audit_tol: f64,
    /// Newton starts for the preimage search.
    pub starts: usize,
    pub identity_samples: usize,
    pub busemann_levels: usize,
    pub busemann_t0: f64,
    /// Extra seeded unit vectors for the defect fan.
    pub extra_directions: usize,
}

impl MyersSteenrodOptions {
    pub fn seeded(seed: u64) -> Self {
        MyersSteenrodOptions {
            seed,
            audit_pairs: 8,
            audit_tol: 1e-8,
            starts: 8,
            identity_samples: 4,
            busemann_levels: 4,
            busemann_t0: 1e-2,
            extra_directions: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceAudit {
    pub pairs: usize,
    /// Worst relative distance mismatch.
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MyersSteenrodReport {
    #[serde(with = "serde_vec")]
    pub center: DVector<f64>,
    #[serde(with = "serde_vec")]
    pub image: DVector<f64>,
    pub audit: DistanceAudit,
    pub chart: DistanceChart,
    /// `p_i` with `phi(p_i) = q_i`.
    #[serde(with = "serde_vecs")]
    pub preimages: Vec<DVector<f64>>,
    pub preimages_from_oracle: bool,
    /// `max |r_{p_i}(a) - r_bar_{q_i}(phi(a))|` on samples near `p`.
    pub identity_residual: f64,
    /// `max |theta_bar^{-1}(r_{p_i}(a)) - phi(a)|` on the same samples.
    pub representation_residual: f64,
    #[serde(with = "serde_mat")]
    pub derivative: DMatrix<f64>,
    /// `max |F_bar(phi(p), D v) - F(p, v)|` over the fan.
    pub direct_defect: f64,
    /// `max |F_bar_BM(v) - F(p, v)|`, with `F_bar_BM` from distances along
    /// `t -> phi(p + t v)`.
    pub busemann_mayer_defect: f64,
    /// `max |F_bar_BM(v) - F_bar(phi(p), D v)|`.
    pub route_disagreement: f64,
}

fn ball_point<R: rand::Rng>(probe: &MapProbe, p: &DVector<f64>, radius: f64, rng: &mut R) -> Result<DVector<f64>> {
    let u = unit_direction(rng, p.len());
    let s: f64 = rng.random();
    Ok(p + &u * (radius * s / probe.source.evaluate_f(p, &u)?))
}

fn audit(probe: &MapProbe, p: &DVector<f64>, radius: f64, opts: &MyersSteenrodOptions) -> Result<DistanceAudit> {
    let mut rng = seeded_rng(opts.seed ^ 0xa0d1);
    let mut worst = 0.0f64;
    for k in 0..opts.audit_pairs.max(1) {
        let a = if k == 0 { p.clone() } else { ball_point(probe, p, 0.5 * radius, &mut rng)? };
        let b = ball_point(probe, p, 0.5 * radius, &mut rng)?;
        let d = distance(&probe.source, &a, &b)?;
        let db = distance(&probe.target, &probe.apply(&a)?, &probe.apply(&b)?)?;
        let rel = (db - d).abs() / (1.0 + d);
        if !(rel <= opts.audit_tol) {
            return Err(FinslerError::NotDistancePreserving {
                a: a.iter().cloned().collect(),
                b: b.iter().cloned().collect(),
                source_distance: d,
                image_distance: db,
            });
        }
        worst = worst.max(rel);
    }
    Ok(DistanceAudit {
        pairs: opts.audit_pairs.max(1),
        worst,
    })
}

/// Solves `phi(a) = q` by damped Newton from seeded starts around `p`.
fn find_preimage(
    probe: &MapProbe,
    q: &DVector<f64>,
    p: &DVector<f64>,
    radius: f64,
    opts: &MyersSteenrodOptions,
) -> Result<DVector<f64>> {
    let tol = 1e-12 * (1.0 + q.amax());
    let mut rng = seeded_rng(opts.seed ^ 0x9e1);
    let mut starts = vec![p.clone()];
    for _ in 1..opts.starts.max(1) {
        starts.push(ball_point(probe, p, radius, &mut rng)?);
    }
    let mut best = f64::INFINITY;
    'start: for x0 in starts {
        let mut x = x0;
        let Ok(fx) = probe.apply(&x) else { continue };
        let mut r = fx - q;
        for _ in 0..40 {
            let rn = r.amax();
            best = best.min(rn);
            if rn < tol {
                return Ok(x);
            }
            let Ok(d) = probe.derivative(&x) else { continue 'start };
            let Some(dx) = d.lu().solve(&(-&r)) else { continue 'start };
            let mut alpha = 1.0;
            loop {
                let trial = &x + &dx * alpha;
                if let Ok(ft) = probe.apply(&trial) {
                    let rt = ft - q;
                    if rt.norm() < r.norm() {
                        x = trial;
                        r = rt;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-4 {
                    continue 'start;
                }
            }
        }
    }
    Err(FinslerError::Oracle(format!(
        "no preimage of {:?} found from {} starts (best residual {best:e})",
        q.as_slice(),
        opts.starts
    )))
}

/// Reconstructs `D phi(p)` of a distance-preserving `probe` from point
/// evaluations and the two metrics. Distance preservation is audited first.
pub fn myers_steenrod_reconstruct(
    probe: &MapProbe,
    p: &DVector<f64>,
    radius: f64,
    opts: &MyersSteenrodOptions,
) -> Result<MyersSteenrodReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(FinslerError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    probe.source.check_point(p)?;
    let audit = audit(probe, p, radius, opts)?;
    let image = probe.apply(p)?;
    let chart = build_distance_chart(&probe.target, &image, radius, opts.seed)?;

    let mut preimages = Vec::with_capacity(chart.dim());
    let mut from_oracle = true;
    for q in &chart.base_points {
        let pre = match probe.preimage(q.coords()) {
            Some(r) => r?,
            None => {
                from_oracle = false;
                find_preimage(probe, q.coords(), p, radius, opts)?
            }
        };
        preimages.push(pre);
    }
    let warm = preimages
        .iter()
        .map(|pi| Ok(invert_exp(&probe.source, pi, p, default_tol(p))?.v))
        .collect::<Result<Vec<_>>>()?;
    let radial = |a: &DVector<f64>| -> Result<DVector<f64>> {
        let mut out = DVector::zeros(preimages.len());
        for (i, (pi, w)) in preimages.iter().zip(&warm).enumerate() {
            let v = invert_exp_from(&probe.source, pi, a, w, default_tol(a))?.v;
            out[i] = probe.source.evaluate_f(pi, &v)?;
        }
        Ok(out)
    };
    let tol = |t: &DVector<f64>| 1e-12 * (1.0 + t.amax());
    let represent = |a: &DVector<f64>| -> Result<DVector<f64>> {
        let t = radial(a)?;
        Ok(chart.invert(&t, tol(&t))?.into_inner())
    };

    let mut rng = seeded_rng(opts.seed ^ 0x1de);
    let mut identity_residual = 0.0f64;
    let mut representation_residual = 0.0f64;
    for _ in 0..opts.identity_samples {
        let a = ball_point(probe, p, 0.5 * chart.certified_radius, &mut rng)?;
        let fa = probe.apply(&a)?;
        let lhs = radial(&a)?;
        let rhs = chart.evaluate(&fa)?;
        identity_residual = identity_residual.max((lhs - rhs).amax());
        representation_residual = representation_residual.max((represent(&a)? - fa).amax());
    }

    let n = p.len();
    let h = 1e-3 * (1.0 + p.amax());
    let mut derivative = DMatrix::zeros(n, n);
    for j in 0..n {
        let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
        derivative.set_column(j, &central_difference_vec(represent, p, &e, h, 2)?);
    }

    let oracle = QuasiMetricOracle::from_metric(probe.target.clone());
    let (mut direct, mut bm, mut route) = (0.0f64, 0.0f64, 0.0f64);
    for v in direction_fan(n, opts.extra_directions, opts.seed ^ 0xd1) {
        let f = probe.source.evaluate_f(p, &v)?;
        let fd = probe.target.evaluate_f(&image, &(&derivative * &v))?;
        let alpha = |t: f64| probe.apply(&(p + &v * t)).unwrap_or_else(|_| DVector::from_element(n, f64::NAN));
        let fb = busemann_mayer_f(&oracle, alpha, opts.busemann_t0, opts.busemann_levels)?;
        direct = direct.max((fd - f).abs());
        bm = bm.max((fb - f).abs());
        route = route.max((fb - fd).abs());
    }

    Ok(MyersSteenrodReport {
        center: p.clone(),
        image,
        audit,
        chart,
        preimages,
        preimages_from_oracle: from_oracle,
        identity_residual,
        representation_residual,
        derivative,
        direct_defect: direct,
        busemann_mayer_defect: bm,
        route_disagreement: route,
    })
}
