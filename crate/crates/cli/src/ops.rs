//! Single operations and the two CSV experiments.

use finsler_core::distance::{DistanceTable, QuasiMetricOracle};
use finsler_core::maps::{isometry_verdict, myers_steenrod_reconstruct, submetry_ball_image, submetry_differential};
use finsler_core::numcore::sampling::seeded_rng;
use finsler_core::{
    build_distance_chart, distance, integrate_geodesic, normal_radius, quasimetric_audit, validate_finsler,
    FinslerError, MetricFamily, SubmetryProbe, ValidationReport,
};
use nalgebra::DVector;

use crate::params::*;
use crate::suites::{default_target, map_label, mat_rows, witness};
use crate::{Ctx, HarnessError};

type Outcome = Result<(), HarnessError>;

/// A point parameter, defaulting to the centre of the sampling region.
fn point(ctx: &Ctx, name: &str, v: &Option<Vec<f64>>) -> Result<DVector<f64>, HarnessError> {
    let m = &ctx.metric;
    let x = match v {
        None => return Ok(m.sampling_region().center()),
        Some(c) => DVector::from_column_slice(c),
    };
    if x.len() != m.dim() {
        return Err(HarnessError::Config(format!(
            "params.{name} has {} coordinates, metric dimension is {}",
            x.len(),
            m.dim()
        )));
    }
    m.check_point(&x)
        .map_err(|e| HarnessError::Config(format!("params.{name}: {e}")))?;
    Ok(x)
}

fn record_validation(ctx: &mut Ctx, report: &ValidationReport) {
    for c in &report.checks {
        ctx.checks.holds(c.name.clone(), c.worst_residual, c.passed);
        if let Some(w) = &c.witness {
            ctx.checks.witness(w.clone());
        }
    }
    ctx.detail("report", report);
}

pub fn validate_metric(ctx: &mut Ctx, p: ValidateParams) -> Outcome {
    let report = validate_finsler(&ctx.metric, p.samples, ctx.seed);
    record_validation(ctx, &report);
    Ok(())
}

pub fn normal_radius_op(ctx: &mut Ctx, p: NormalRadiusParams) -> Outcome {
    let x = point(ctx, "p", &p.p)?;
    let est = normal_radius(&ctx.metric, &x, p.cap)?;
    ctx.checks.holds("radius-positive", est.radius, est.radius > 0.0);
    ctx.detail("estimate", &est);
    Ok(())
}

pub fn quasimetric(ctx: &mut Ctx, p: AuditParams) -> Outcome {
    let rho = QuasiMetricOracle::from_metric(ctx.metric.clone());
    let report = quasimetric_audit(&rho, &ctx.metric.sampling_region(), p.pairs, p.triples, ctx.seed);
    record_validation(ctx, &report);
    Ok(())
}

pub fn distance_chart(ctx: &mut Ctx, p: ChartParams) -> Outcome {
    let x = point(ctx, "p", &p.p)?;
    let chart = build_distance_chart(&ctx.metric, &x, p.budget, ctx.seed)?;
    let norm = chart.jacobian.norm();
    ctx.checks.at_most("jacobian-triangularity", chart.upper_mass() / norm, 1e-6);
    let expected = chart.expected_diagonal()?;
    let diag = (chart.jacobian.diagonal() - expected).amax();
    ctx.checks.at_most("jacobian-diagonal", diag, 1e-4);
    let mut worst = 0.0f64;
    let mut rng = seeded_rng(ctx.seed ^ 0x7219);
    for _ in 0..p.roundtrip_points {
        let u = finsler_core::numcore::sampling::unit_direction(&mut rng, x.len());
        let s = 0.3 * chart.certified_radius * rand::Rng::random::<f64>(&mut rng);
        let a = &x + &u * (s / ctx.metric.evaluate_f(&x, &u)?);
        let t = chart.evaluate(&a)?;
        let b = chart.invert(&t, 1e-10 * (1.0 + t.amax()))?.into_inner();
        worst = worst.max((b - a).amax());
    }
    ctx.checks.at_most("chart-round-trip", worst, 1e-7);
    ctx.detail("certified_radius", chart.certified_radius);
    ctx.detail("jacobian", mat_rows(&chart.jacobian));
    ctx.file("distance_chart.json", "distance-chart", chart.to_json()?);
    Ok(())
}

pub fn isometry(ctx: &mut Ctx, p: IsometryParams) -> Outcome {
    let spec = p.map.expect("validated");
    let mut probe = spec.probe(&ctx.metric)?;
    if p.point_only {
        probe = probe.point_only();
    }
    let v = isometry_verdict(&probe, p.points, ctx.seed)?;
    match p.expect_isometry {
        Some(true) => {
            ctx.checks.at_most("isometry-defect", v.isometry.value, v.isometry_threshold);
            ctx.checks.at_most("spray-defect", v.spray.value, v.spray_threshold);
            ctx.checks.at_most("geodesic-defect", v.geodesic.value, v.geodesic_threshold);
        }
        Some(false) => {
            ctx.checks.at_least("isometry-defect", v.isometry.value, v.isometry_threshold);
        }
        None => {
            ctx.checks.holds("evaluated", v.isometry.value, true);
        }
    }
    ctx.detail("map", map_label(&spec));
    ctx.detail("verdict", &v);
    Ok(())
}

pub fn myers_steenrod(ctx: &mut Ctx, p: MyersSteenrodParams) -> Outcome {
    let spec = p.map.expect("validated");
    let x = point(ctx, "p", &p.p)?;
    let probe = spec.probe(&ctx.metric)?;
    let opts = finsler_core::maps::MyersSteenrodOptions::seeded(ctx.seed);
    let rep = match myers_steenrod_reconstruct(&probe.point_only(), &x, p.radius, &opts) {
        Ok(r) => r,
        Err(FinslerError::NotDistancePreserving {
            a,
            b,
            source_distance,
            image_distance,
        }) => {
            let w = witness("a, b, rho(a,b), rho(phi a, phi b)", &[&a, &b, &[source_distance, image_distance]]);
            ctx.checks
                .holds_with("distance-audit", (image_distance - source_distance).abs(), false, w);
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    ctx.checks.holds("distance-audit", rep.audit.worst, true);
    let exact = probe.derivative(&x)?;
    ctx.checks.at_most("derivative-recovery", (&rep.derivative - &exact).amax(), 1e-3);
    ctx.checks.at_most("direct-defect", rep.direct_defect, 1e-3);
    ctx.checks.at_most("busemann-mayer-defect", rep.busemann_mayer_defect, 1e-3);
    ctx.checks.at_most("route-disagreement", rep.route_disagreement, 1e-3);
    let mut csv = String::new();
    for row in mat_rows(&rep.derivative) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:e}")).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    ctx.file("derivative.csv", "derivative", csv);
    ctx.detail("map", map_label(&spec));
    ctx.detail("derivative", mat_rows(&rep.derivative));
    ctx.detail("identity_residual", rep.identity_residual);
    ctx.detail("representation_residual", rep.representation_residual);
    Ok(())
}

fn submetry_setup(
    ctx: &Ctx,
    p: &Option<Vec<f64>>,
    q: &Option<Vec<f64>>,
    d: f64,
) -> Result<(SubmetryProbe, DVector<f64>), HarnessError> {
    let x = point(ctx, "p", p)?;
    let sp = SubmetryProbe::distance_function(ctx.metric.clone(), &x, d)?;
    let y = match q {
        Some(_) => point(ctx, "q", q)?,
        None => default_target(&ctx.metric, &x, d)?,
    };
    Ok((sp, y))
}

pub fn ball_image(ctx: &mut Ctx, p: BallImageParams) -> Outcome {
    let (sp, q) = submetry_setup(ctx, &p.p, &p.q, p.distance)?;
    let img = submetry_ball_image(&sp, &q, p.epsilon, p.samples, ctx.seed)?;
    ctx.checks.holds("containment", img.max - img.min, img.containment);
    let gap = (img.min - (img.center_value - p.epsilon)).max(img.center_value + p.epsilon - img.max);
    ctx.checks.at_most("coverage", gap, img.coverage_tol.max(0.02));
    ctx.detail("ball_image", &img);
    Ok(())
}

pub fn differential(ctx: &mut Ctx, p: DifferentialParams) -> Outcome {
    let (sp, q) = submetry_setup(ctx, &p.p, &p.q, p.distance)?;
    let diff = submetry_differential(&sp, &q, p.delta, ctx.seed)?;
    ctx.checks.at_most("sandwich-gradient-agreement", diff.residual, 1e-3);
    ctx.checks.at_most("sandwich-vs-direct-gradient", diff.direct_residual, 1e-3);
    let (violation, at_q) = diff.sandwich(&sp, &q, 0.5 * p.delta, p.sandwich_samples, ctx.seed)?;
    ctx.checks.at_most("sandwich-ordering", violation, 1e-8);
    ctx.detail("equality_gap_at_q", at_q);
    ctx.detail("differential", &diff);
    Ok(())
}

pub fn geodesic_path(ctx: &mut Ctx, p: GeodesicPathParams) -> Outcome {
    let m = ctx.metric.clone();
    let x = point(ctx, "p", &p.p)?;
    let v = match &p.v {
        Some(c) if c.len() == m.dim() => DVector::from_column_slice(c),
        Some(c) => {
            return Err(HarnessError::Config(format!(
                "params.v has {} components, metric dimension is {}",
                c.len(),
                m.dim()
            )))
        }
        None => {
            let mut e = DVector::zeros(m.dim());
            e[0] = 1.0;
            &e / m.evaluate_f(&x, &e)?
        }
    };
    let path = integrate_geodesic(&m, &x, &v, (p.t_min, p.t_max), p.tol)?;
    let drift = path.speed_drift(&m, 3)?;
    ctx.checks.at_most("speed-drift", drift, 1e-6);
    ctx.checks.holds("inside-patch", path.t_plus - path.t_minus, !path.is_truncated());
    ctx.detail("span", [path.t_minus, path.t_plus]);
    ctx.detail("samples", path.samples.len());
    ctx.detail("stats", path.stats);
    ctx.file("geodesic_path.csv", "geodesic-path", path.to_csv_string()?);
    Ok(())
}

pub fn distance_asymmetry(ctx: &mut Ctx, p: AsymmetryParams) -> Outcome {
    let m = ctx.metric.clone();
    let region = m.sampling_region();
    let mut rng = seeded_rng(ctx.seed ^ 0xa5e7);
    let pairs: Vec<_> = (0..p.pairs)
        .map(|_| (region.sample(&mut rng), region.sample(&mut rng)))
        .collect();
    let forward = DistanceTable::sample(&QuasiMetricOracle::from_metric(m.clone()), &pairs)?;
    let n = m.dim();
    let mut csv = String::new();
    let names: Vec<String> = (1..=n)
        .map(|i| format!("p{i}"))
        .chain((1..=n).map(|i| format!("q{i}")))
        .chain(["rho_pq".into(), "rho_qp".into(), "asymmetry".into()])
        .collect();
    csv.push_str(&names.join(","));
    csv.push('\n');
    let closed_form = matches!(m.family(), MetricFamily::Randers { .. }) && m.is_flat_model();
    let mut worst_closed = 0.0f64;
    let mut worst_gap = 0.0f64;
    for (row, (a, b)) in forward.rows.iter().zip(&pairs) {
        let back = distance(&m, b, a)?;
        let gap = row.rho - back;
        worst_gap = worst_gap.max(gap.abs());
        if closed_form {
            let drift = m.drift_at(a).expect("randers has a drift");
            worst_closed = worst_closed.max((gap - 2.0 * drift.dot(&(b - a))).abs());
        }
        let cells: Vec<String> = a
            .iter()
            .chain(b.iter())
            .chain([row.rho, back, gap].iter())
            .map(|c| format!("{c:e}"))
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    ctx.checks.holds("evaluated", pairs.len() as f64, true);
    if closed_form {
        ctx.checks.at_most("randers-asymmetry", worst_closed, 1e-7);
    }
    ctx.detail("max_asymmetry", worst_gap);
    ctx.file("distance_asymmetry.csv", "distance-asymmetry", csv);
    Ok(())
}
