//! The acceptance suites, one per area, each runnable on any metric family.

use finsler_core::distance::{arc_length, busemann_mayer_f, default_tol, Polyline};
use finsler_core::geodesics::{exp_derivative_at_zero, rescaling_defect, PATH_TOL};
use finsler_core::maps::{
    isometry_verdict, myers_steenrod_reconstruct, submetry_ball_image, submetry_differential, MyersSteenrodOptions,
};
use finsler_core::numcore::sampling::{log_uniform, unit_direction};
use finsler_core::spray::spray_residuals;
use finsler_core::{
    build_distance_chart, canonical_spray_residuals, distance, exponential, integrate_geodesic, invert_exp,
    normal_radius, DiffConfig, FinslerError, FinslerMetric, MapSpec, MetricFamily, PerturbedSpray,
    QuasiMetricOracle, SubmetryProbe, Witness,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::json;

use crate::params::*;
use crate::{Ctx, HarnessError};

type Outcome = Result<(), HarnessError>;

pub(crate) fn witness(description: &str, parts: &[&[f64]]) -> Witness {
    Witness {
        description: description.to_string(),
        values: parts.iter().flat_map(|p| p.iter().copied()).collect(),
    }
}

/// Running maximum with the witness of the sample that produced it.
struct Worst {
    value: f64,
    witness: Option<Witness>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: f64::NEG_INFINITY,
            witness: None,
        }
    }

    fn observe(&mut self, v: f64, w: impl FnOnce() -> Witness) {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > self.value {
            self.value = v;
            self.witness = Some(w());
        }
    }

    /// Value with an empty sample set mapped to 0.
    fn get(&self) -> f64 {
        if self.value == f64::NEG_INFINITY {
            0.0
        } else {
            self.value
        }
    }
}

fn record_at_most(ctx: &mut Ctx, name: &str, w: Worst, threshold: f64) {
    ctx.checks.at_most(name, w.get(), threshold);
    if let Some(wit) = w.witness {
        ctx.checks.witness(wit);
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

fn coordinate_fan(n: usize) -> Vec<DVector<f64>> {
    (0..n).flat_map(|i| [unit(n, i), -unit(n, i)]).collect()
}

pub fn spray(ctx: &mut Ctx, p: SpraySuiteParams) -> Outcome {
    let m = ctx.metric.clone();
    let n = m.dim();
    let region = m.sampling_region();
    let mut rng = ctx.rng(0x5b7a);
    let corrupted = PerturbedSpray::new(m.clone(), unit(n, 0) * p.corruption)?;
    let cfg = DiffConfig::default();
    let mut canonical = Worst::new();
    let mut bad = Worst::new();
    let mut flagged = 0usize;
    for _ in 0..p.samples {
        let x = region.sample(&mut rng);
        let y = unit_direction(&mut rng, n) * log_uniform(&mut rng, 0.1, 10.0);
        let r = canonical_spray_residuals(&m, &x, &y)?;
        canonical.observe(r.max_abs() / r.f, || witness("x, y, residual/F", &[x.as_slice(), y.as_slice(), &[r.max_abs() / r.f]]));
        let rb = spray_residuals(&corrupted, &x, &y, &cfg)?;
        let rel = rb.max_abs() / rb.f;
        if rel > 1e-2 {
            flagged += 1;
        }
        bad.observe(rel, || witness("x, y, residual/F", &[x.as_slice(), y.as_slice(), &[rel]]));
    }
    record_at_most(ctx, "canonical-spray-residual", canonical, 1e-6);
    ctx.checks.at_least("corrupted-spray-residual", bad.get(), 1e-2);
    if let Some(w) = bad.witness {
        ctx.checks.witness(w);
    }
    ctx.detail("samples", p.samples);
    ctx.detail("corrupted_flagged", flagged);
    Ok(())
}

pub fn geodesic(ctx: &mut Ctx, p: GeodesicSuiteParams) -> Outcome {
    let m = ctx.metric.clone();
    let n = m.dim();
    let region = m.sampling_region();
    let mut rng = ctx.rng(0x6e0d);

    let mut drift = Worst::new();
    let mut truncated = 0usize;
    for _ in 0..p.paths {
        let x = region.sample(&mut rng);
        let u = unit_direction(&mut rng, n);
        let v = &u / m.evaluate_f(&x, &u)?;
        let path = integrate_geodesic(&m, &x, &v, (-1.0, 1.0), PATH_TOL)?;
        if path.is_truncated() {
            truncated += 1;
        }
        let d = path.speed_drift(&m, 3)?;
        drift.observe(d, || witness("p, v, drift", &[x.as_slice(), v.as_slice(), &[d]]));
    }
    record_at_most(ctx, "speed-drift", drift, 1e-6);
    ctx.checks.holds("paths-inside-patch", truncated as f64, truncated == 0);

    let mut rescale = Worst::new();
    for _ in 0..p.rescaling_pairs {
        let x = region.sample(&mut rng);
        let u = unit_direction(&mut rng, n);
        let v = &u * (0.8 / m.evaluate_f(&x, &u)?);
        let t = log_uniform(&mut rng, 0.25, 4.0);
        let s = rng.random_range(0.05..1.0) / t;
        let d = rescaling_defect(&m, &x, &v, t, s)?;
        rescale.observe(d, || witness("p, v, t, s, defect", &[x.as_slice(), v.as_slice(), &[t, s, d]]));
    }
    record_at_most(ctx, "rescaling-defect", rescale, 1e-7);

    let mut dexp = Worst::new();
    for _ in 0..p.exp_points {
        let x = region.sample(&mut rng);
        let d = exp_derivative_at_zero(&m, &x, 1e-3)?;
        let err = (d - DMatrix::identity(n, n)).amax();
        dexp.observe(err, || witness("p, max |D exp - I|", &[x.as_slice(), &[err]]));
    }
    record_at_most(ctx, "exp-derivative-at-zero", dexp, 1e-4);
    ctx.detail("paths", p.paths);
    ctx.detail("rescaling_pairs", p.rescaling_pairs);
    Ok(())
}

fn skip_patch_exit<T>(r: finsler_core::Result<T>) -> finsler_core::Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(FinslerError::PatchExit { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn distance_suite(ctx: &mut Ctx, p: DistanceSuiteParams) -> Outcome {
    let m = ctx.metric.clone();
    let n = m.dim();
    let region = m.sampling_region();
    let mut rng = ctx.rng(0xd157);

    // rho(p, exp_p(t u)) = t F(u) inside the normal radius.
    let mut law = Worst::new();
    let mut law_samples = 0usize;
    let mut centers = Vec::new();
    for _ in 0..p.centers.max(1) {
        let x = region.sample(&mut rng);
        let r = normal_radius(&m, &x, 1.0)?.radius;
        let mut dirs = coordinate_fan(n);
        dirs.push(unit_direction(&mut rng, n));
        dirs.push(unit_direction(&mut rng, n));
        for u in dirs {
            let u = &u / m.evaluate_f(&x, &u)?;
            for frac in [0.3, 0.6, 0.9] {
                let t = frac * r;
                let Some(q) = skip_patch_exit(exponential(&m, &x, &(&u * t)))? else { continue };
                let d = distance(&m, &x, q.coords())?;
                law_samples += 1;
                law.observe((d - t).abs(), || witness("p, u, t, rho", &[x.as_slice(), u.as_slice(), &[t, d]]));
            }
        }
        centers.push((x, r));
    }
    record_at_most(ctx, "geodesic-distance-law", law, 1e-6);
    ctx.detail("law_samples", law_samples);

    if let MetricFamily::HyperbolicHalfPlane { scale, .. } = *m.family() {
        let mut err = Worst::new();
        for _ in 0..p.pairs {
            let (a, b) = (region.sample(&mut rng), region.sample(&mut rng));
            let closed = scale * (1.0 + (&a - &b).norm_squared() / (2.0 * a[n - 1] * b[n - 1])).acosh();
            let d = distance(&m, &a, &b)?;
            err.observe((d - closed).abs(), || witness("p, q, rho, closed form", &[a.as_slice(), b.as_slice(), &[d, closed]]));
        }
        record_at_most(ctx, "hyperbolic-closed-form", err, 1e-6);
    }

    if matches!(m.family(), MetricFamily::Randers { .. }) && m.is_flat_model() {
        let mut err = Worst::new();
        for _ in 0..p.pairs {
            let (a, b) = (region.sample(&mut rng), region.sample(&mut rng));
            let drift = m.drift_at(&a).expect("randers has a drift");
            let expected = 2.0 * drift.dot(&(&b - &a));
            let (f, r) = (distance(&m, &a, &b)?, distance(&m, &b, &a)?);
            err.observe((f - r - expected).abs(), || {
                witness("p, q, rho(p,q), rho(q,p), 2<b,q-p>", &[a.as_slice(), b.as_slice(), &[f, r, expected]])
            });
        }
        record_at_most(ctx, "randers-asymmetry", err, 1e-7);
    }

    // Arc lengths: polylines never beat rho, the geodesic attains it.
    let mut gap = Worst::new();
    let mut geo = Worst::new();
    let mut measured = 0usize;
    let per_pair = p.polylines.div_ceil(centers.len());
    for (x, r) in &centers {
        let u = unit_direction(&mut rng, n);
        let Some(q) = skip_patch_exit(exponential(&m, x, &(&u * (0.5 * r / m.evaluate_f(x, &u)?))))? else {
            continue;
        };
        let q = q.into_inner();
        let d = distance(&m, x, &q)?;
        let shot = invert_exp(&m, x, &q, default_tol(&q))?;
        let path = integrate_geodesic(&m, x, &shot.v, (0.0, 1.0), 1e-11)?;
        let lg = arc_length(&m, &path)?;
        geo.observe((lg - d).abs(), || witness("p, q, length, rho", &[x.as_slice(), q.as_slice(), &[lg, d]]));
        let span = (&q - x).norm();
        for k in 0..per_pair {
            if measured >= p.polylines {
                break;
            }
            let inner = 1 + k % 3;
            let sigma = rng.random_range(0.0..0.3) * span;
            let mut vs = vec![x.clone()];
            for j in 1..=inner {
                let s = j as f64 / (inner + 1) as f64;
                let jitter = unit_direction(&mut rng, n) * (sigma * rng.random::<f64>());
                vs.push(x + (&q - x) * s + jitter);
            }
            vs.push(q.clone());
            if vs.iter().any(|v| m.check_point(v).is_err()) {
                continue;
            }
            let l = arc_length(&m, &Polyline::new(vs)?)?;
            measured += 1;
            gap.observe(d - l, || witness("p, q, rho, polyline length", &[x.as_slice(), q.as_slice(), &[d, l]]));
        }
    }
    record_at_most(ctx, "polyline-lower-bound", gap, 1e-4);
    record_at_most(ctx, "geodesic-arc-length", geo, 1e-7);
    ctx.detail("polylines", measured);
    Ok(())
}

pub fn busemann_mayer(ctx: &mut Ctx, p: BusemannMayerParams) -> Outcome {
    let m = ctx.metric.clone();
    let n = m.dim();
    let region = m.sampling_region();
    let rho = QuasiMetricOracle::from_metric(m.clone());
    let mut rng = ctx.rng(0xb0b0);
    let mut err = Worst::new();
    for _ in 0..p.pairs {
        let x = region.sample(&mut rng);
        let u = unit_direction(&mut rng, n);
        let v = &u * (log_uniform(&mut rng, 0.5, 2.0) / m.evaluate_f(&x, &u)?);
        let bm = busemann_mayer_f(&rho, |t| &x + &v * t, p.t0, p.levels)?;
        let f = m.evaluate_f(&x, &v)?;
        let rel = (bm - f).abs() / f;
        err.observe(rel, || witness("p, v, recovered, F", &[x.as_slice(), v.as_slice(), &[bm, f]]));
    }
    record_at_most(ctx, "busemann-mayer-recovery", err, 1e-3);
    ctx.detail("pairs", p.pairs);
    Ok(())
}

pub fn distance_chart(ctx: &mut Ctx, p: ChartSuiteParams) -> Outcome {
    let m = ctx.metric.clone();
    let n = m.dim();
    let region = m.sampling_region();
    let mut rng = ctx.rng(0xc4a7);
    let mut failures = Vec::new();
    let mut upper = Worst::new();
    let mut diag = Worst::new();
    let mut nonpositive = 0usize;
    let mut trip = Worst::new();
    let mut lambda_dev = 0.0f64;
    let mut radii = Vec::new();
    for c in 0..p.centers {
        let x = region.sample(&mut rng);
        let chart = match build_distance_chart(&m, &x, p.budget, ctx.seed.wrapping_add(c as u64)) {
            Ok(ch) => ch,
            Err(e) => {
                failures.push(json!({"center": x.as_slice(), "error": e.to_string()}));
                continue;
            }
        };
        radii.push(chart.certified_radius);
        let j = &chart.jacobian;
        let rel = chart.upper_mass() / j.norm();
        upper.observe(rel, || witness("p, upper mass / |J|", &[x.as_slice(), &[rel]]));
        for (i, e) in chart.emanating.iter().enumerate() {
            lambda_dev = lambda_dev.max((e.lambda - 1.0).abs());
            let expected = e.lambda * m.evaluate_f(e.q.coords(), &e.w)?;
            if !(j[(i, i)] > 0.0) {
                nonpositive += 1;
            }
            let gap = (j[(i, i)] - expected).abs();
            diag.observe(gap, || witness("p, i, J_ii, lambda F(w)", &[x.as_slice(), &[i as f64, j[(i, i)], expected]]));
        }
        for _ in 0..p.roundtrip_points {
            let u = unit_direction(&mut rng, n);
            let s = rng.random_range(0.0..0.3) * chart.certified_radius;
            let a = &x + &u * (s / m.evaluate_f(&x, &u)?);
            let t = chart.evaluate(&a)?;
            let b = chart.invert(&t, 1e-10 * (1.0 + t.amax()))?.into_inner();
            let e = (&b - &a).amax();
            trip.observe(e, || witness("p, a, |theta^-1(theta(a)) - a|", &[x.as_slice(), a.as_slice(), &[e]]));
        }
    }
    ctx.checks.holds("chart-construction", failures.len() as f64, failures.is_empty());
    record_at_most(ctx, "jacobian-triangularity", upper, 1e-6);
    record_at_most(ctx, "jacobian-diagonal", diag, 1e-4);
    ctx.checks.holds("jacobian-diagonal-positive", nonpositive as f64, nonpositive == 0);
    record_at_most(ctx, "chart-round-trip", trip, 1e-7);
    ctx.detail("construction_failures", failures);
    ctx.detail("certified_radii", radii);
    ctx.detail("max_lambda_deviation", lambda_dev);
    Ok(())
}

fn offset(n: usize, horizontal_only: bool) -> Vec<f64> {
    let base = [0.3, -0.2, 0.1, -0.05];
    let mut v: Vec<f64> = (0..n).map(|i| base[i % base.len()]).collect();
    if horizontal_only {
        v[n - 1] = 0.0;
    }
    v
}

/// Built-in self-maps of a family: `(isometries, non-isometries)`. The first
/// non-isometry is never distance preserving.
pub fn builtin_maps(m: &FinslerMetric) -> (Vec<MapSpec>, Vec<MapSpec>) {
    let n = m.dim();
    let planar = n >= 2;
    let mut iso = Vec::new();
    let mut non = Vec::new();
    match m.family() {
        MetricFamily::Euclidean { .. } => {
            if planar {
                iso.push(MapSpec::Rotation { angle: 0.7 });
            }
            iso.push(MapSpec::Translation { offset: offset(n, false) });
            non.push(MapSpec::Scaling { factor: 2.0 });
            if planar {
                non.push(MapSpec::Shear { amount: 1.0 });
            }
        }
        MetricFamily::MinkowskiNorm { .. } => {
            iso.push(MapSpec::Translation { offset: offset(n, false) });
            if planar {
                iso.push(MapSpec::Rotation {
                    angle: std::f64::consts::FRAC_PI_2,
                });
            }
            non.push(MapSpec::Scaling { factor: 2.0 });
            if planar {
                non.push(MapSpec::Rotation { angle: 0.3 });
            }
        }
        MetricFamily::Riemannian { .. } => {
            if m.is_flat_model() {
                iso.push(MapSpec::Translation { offset: offset(n, false) });
            }
            non.push(MapSpec::Scaling { factor: 2.0 });
        }
        MetricFamily::Randers { .. } => {
            if m.is_flat_model() {
                iso.push(MapSpec::Translation { offset: offset(n, false) });
            }
            non.push(MapSpec::Scaling { factor: 2.0 });
            let center = m.sampling_region().center();
            if planar && m.drift_norm(&center).is_some_and(|b| b > 1e-3) {
                non.push(MapSpec::Rotation {
                    angle: std::f64::consts::FRAC_PI_2,
                });
            }
        }
        MetricFamily::HyperbolicHalfPlane { .. } => {
            if planar {
                iso.push(MapSpec::Translation { offset: offset(n, true) });
            }
            iso.push(MapSpec::Scaling { factor: 2.0 });
            if planar {
                non.push(MapSpec::Shear { amount: 1.0 });
                non.push(MapSpec::Bend { amount: 0.2 });
            }
        }
        MetricFamily::RoundSpherePatch { .. } => {
            if planar {
                iso.push(MapSpec::Rotation { angle: 0.7 });
            }
            non.push(MapSpec::Scaling { factor: 1.5 });
            non.push(MapSpec::Translation { offset: offset(n, false) });
        }
    }
    (iso, non)
}

/// Short label such as `rotation(1.5708)`.
pub fn map_label(spec: &MapSpec) -> String {
    match spec {
        MapSpec::Rotation { angle } => format!("rotation({angle:.4})"),
        MapSpec::Translation { offset } => {
            let parts: Vec<String> = offset.iter().map(|c| format!("{c}")).collect();
            format!("translation({})", parts.join(","))
        }
        MapSpec::Scaling { factor } => format!("scaling({factor})"),
        MapSpec::Shear { amount } => format!("shear({amount})"),
        MapSpec::Bend { amount } => format!("bend({amount})"),
    }
}

pub fn isometry(ctx: &mut Ctx, p: IsometrySuiteParams) -> Outcome {
    let m = ctx.metric.clone();
    let n = m.dim();
    let (iso, non) = builtin_maps(&m);
    let center = m.sampling_region().center();
    let mut verdicts = serde_json::Map::new();
    for spec in &iso {
        let label = map_label(spec);
        let probe = spec.probe(&m)?;
        let v = isometry_verdict(&probe, p.points, ctx.seed)?;
        ctx.checks.at_most(format!("isometry:{label}:isometry-defect"), v.isometry.value, v.isometry_threshold);
        ctx.checks.at_most(format!("isometry:{label}:spray-defect"), v.spray.value, v.spray_threshold);
        ctx.checks.at_most(format!("isometry:{label}:geodesic-defect"), v.geodesic.value, v.geodesic_threshold);

        let mut rng = ctx.rng(0x15 ^ verdicts.len() as u64);
        let mut dist = Worst::new();
        for _ in 0..p.pairs {
            let a = &center + unit_direction(&mut rng, n) * 0.2;
            let b = &center + unit_direction(&mut rng, n) * 0.2;
            let d = distance(&m, &a, &b)?;
            let db = distance(&m, &probe.apply(&a)?, &probe.apply(&b)?)?;
            dist.observe((db - d).abs(), || witness("a, b, rho, rho of images", &[a.as_slice(), b.as_slice(), &[d, db]]));
        }
        record_at_most(ctx, &format!("isometry:{label}:distance-preservation"), dist, 1e-7);
        verdicts.insert(label, serde_json::to_value(&v).unwrap_or_default());
    }
    for spec in &non {
        let label = map_label(spec);
        let v = isometry_verdict(&spec.probe(&m)?, p.points, ctx.seed)?;
        ctx.checks.at_least(format!("non-isometry:{label}:isometry-defect"), v.isometry.value, v.isometry_threshold);
        if let Some(w) = v.isometry.witness.clone() {
            ctx.checks.witness(w);
        }
        verdicts.insert(label, serde_json::to_value(&v).unwrap_or_default());
    }
    ctx.detail("verdicts", verdicts);
    Ok(())
}

pub fn myers_steenrod(ctx: &mut Ctx, p: MyersSteenrodSuiteParams) -> Outcome {
    let m = ctx.metric.clone();
    let (iso, non) = builtin_maps(&m);
    let center = m.sampling_region().center();
    let opts = MyersSteenrodOptions::seeded(ctx.seed);
    match iso.first() {
        Some(spec) => {
            let label = map_label(spec);
            let probe = spec.probe(&m)?;
            let exact = probe.derivative(&center)?;
            let rep = myers_steenrod_reconstruct(&probe.point_only(), &center, p.radius, &opts)?;
            let err = (&rep.derivative - &exact).amax();
            ctx.checks.at_most(format!("{label}:derivative-recovery"), err, 1e-3);
            ctx.checks.at_most(format!("{label}:direct-defect"), rep.direct_defect, 1e-3);
            ctx.checks.at_most(format!("{label}:busemann-mayer-defect"), rep.busemann_mayer_defect, 1e-3);
            ctx.checks.at_most(format!("{label}:route-disagreement"), rep.route_disagreement, 1e-3);
            ctx.detail(
                "reconstruction",
                json!({
                    "map": label,
                    "derivative": mat_rows(&rep.derivative),
                    "exact": mat_rows(&exact),
                    "audit": rep.audit,
                    "preimages_from_oracle": rep.preimages_from_oracle,
                    "identity_residual": rep.identity_residual,
                    "representation_residual": rep.representation_residual,
                }),
            );
        }
        None => ctx.detail("reconstruction", "no built-in isometry for this metric"),
    }
    if let Some(spec) = non.first() {
        let label = map_label(spec);
        let probe = spec.probe(&m)?.point_only();
        let name = format!("{label}:refused-by-distance-audit");
        match myers_steenrod_reconstruct(&probe, &center, p.radius, &opts) {
            Err(FinslerError::NotDistancePreserving {
                a,
                b,
                source_distance,
                image_distance,
            }) => {
                let w = witness("a, b, rho(a,b), rho(phi a, phi b)", &[&a, &b, &[source_distance, image_distance]]);
                ctx.checks.holds_with(name, (image_distance - source_distance).abs(), true, w);
            }
            Ok(_) => {
                ctx.checks.holds(name, 0.0, false);
            }
            Err(e) => {
                ctx.checks.holds(name, 0.0, false);
                ctx.detail("refusal_error", e.to_string());
            }
        }
    }
    Ok(())
}

pub(crate) fn mat_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

fn refusal(ctx: &mut Ctx, name: &str, metric: FinslerMetric, p: &DVector<f64>) {
    match SubmetryProbe::distance_function(metric, p, 1.0) {
        Err(FinslerError::NonReversible { forward, backward }) => {
            ctx.checks
                .holds_with(name, (forward - backward).abs(), true, witness("F(y), F(-y)", &[&[forward, backward]]));
        }
        _ => {
            ctx.checks.holds(name, 0.0, false);
        }
    }
}

/// Point at F-distance `d` from `p` along `e_1`.
pub(crate) fn default_target(m: &FinslerMetric, p: &DVector<f64>, d: f64) -> finsler_core::Result<DVector<f64>> {
    let e = unit(m.dim(), 0);
    Ok(exponential(m, p, &(&e * (d / m.evaluate_f(p, &e)?)))?.into_inner())
}

pub fn submetry(ctx: &mut Ctx, p: SubmetrySuiteParams) -> Outcome {
    let m = ctx.metric.clone();
    let n = m.dim();
    let center = m.sampling_region().center();
    let mut drift = vec![0.0; n];
    drift[0] = 0.5;
    refusal(ctx, "non-reversible-refused", FinslerMetric::randers_flat(&drift), &DVector::zeros(n));
    if !m.is_reversible() {
        refusal(ctx, "metric-refused", m.clone(), &center);
        ctx.detail("skipped", "metric is not reversible");
        return Ok(());
    }
    let q = default_target(&m, &center, p.distance)?;
    let sp = SubmetryProbe::distance_function(m.clone(), &center, p.distance)?;
    let img = submetry_ball_image(&sp, &q, p.epsilon, p.samples, ctx.seed)?;
    ctx.checks.holds("ball-image-containment", img.max - img.min, img.containment);
    let gap = (img.min - (img.center_value - p.epsilon)).max(img.center_value + p.epsilon - img.max);
    ctx.checks.at_most("ball-image-coverage", gap, 0.02);
    let diff = submetry_differential(&sp, &q, p.delta, ctx.seed)?;
    ctx.checks.at_most("sandwich-gradient-agreement", diff.residual, 1e-3);
    ctx.checks.at_most("sandwich-vs-direct-gradient", diff.direct_residual, 1e-3);
    let (violation, at_q) = diff.sandwich(&sp, &q, 0.5 * p.delta, p.sandwich_samples, ctx.seed)?;
    ctx.checks.at_most("sandwich-ordering", violation, 1e-8);
    ctx.checks.at_most("sandwich-equality-at-q", at_q, 1e-5);
    ctx.detail("ball_image", &img);
    ctx.detail("differential", &diff);
    Ok(())
}
