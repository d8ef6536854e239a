//! Acceptance gate: every criterion runs through the scenario harness at
//! its stated tolerances and prints one PASS/FAIL line. Exits non-zero when
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use finsler_core::MetricFamily;
use finsler_harness::{run_scenario, Operation, RunOutput, RunReport, ScenarioConfig, SCHEMA_VERSION};
use serde_json::{json, Map, Value};

const SEED: u64 = 20240611;

fn families() -> Vec<(&'static str, MetricFamily)> {
    let parse = |v: Value| serde_json::from_value::<MetricFamily>(v).unwrap();
    vec![
        ("euclidean", parse(json!({"family": "euclidean", "dim": 2}))),
        ("minkowski-norm", parse(json!({"family": "minkowski-norm", "dim": 2, "kappa": 1.0}))),
        (
            "riemannian",
            parse(json!({"family": "riemannian", "coefficients": [[2.0, 0.5], [0.5, 1.0]],
                         "conformal_linear": [0.1, -0.05], "conformal_quadratic": 0.05})),
        ),
        ("randers-flat", parse(json!({"family": "randers", "drift": [0.5, 0.0]}))),
        (
            "randers",
            parse(json!({"family": "randers", "drift": [0.2, -0.1],
                         "drift_gradient": [[0.0, 0.15], [-0.15, 0.0]]})),
        ),
        ("hyperbolic", parse(json!({"family": "hyperbolic-half-plane", "dim": 2}))),
        ("hyperbolic-3d", parse(json!({"family": "hyperbolic-half-plane", "dim": 3}))),
        ("sphere", parse(json!({"family": "round-sphere-patch", "dim": 2}))),
    ]
}

fn config(metric: &MetricFamily, op: Operation, params: Map<String, Value>) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: None,
        metric: metric.clone(),
        operation: op,
        params,
        seed: SEED,
        tolerances: Default::default(),
        output: Default::default(),
    }
}

fn run(metric: &MetricFamily, op: Operation) -> RunOutput {
    run_scenario(&config(metric, op, Map::new())).expect("acceptance scenarios are valid")
}

struct Verdict {
    pass: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            pass: true,
            notes: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, note: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.notes.push(note.into());
        }
    }

    /// Every check of the report passed and the run stayed within budget.
    fn report(&mut self, label: &str, r: &RunReport, budget_s: f64) {
        for c in r.checks.iter().filter(|c| !c.pass) {
            self.require(false, format!("{label}: {} = {:e} (threshold {:?})", c.name, c.value, c.threshold));
        }
        if let Some(e) = &r.error {
            self.require(false, format!("{label}: {e}"));
        }
        self.require(
            r.wall_time_s < budget_s,
            format!("{label}: {:.1}s over the {budget_s}s budget", r.wall_time_s),
        );
    }
}

fn value(r: &RunReport, name: &str) -> Option<f64> {
    r.check(name).map(|c| c.value)
}

/// A suite over every listed family: all checks pass within `budget_s` per run.
fn suite_over(op: Operation, budget_s: f64, skip: &[&str]) -> (Verdict, Vec<(String, RunReport)>) {
    let mut v = Verdict::new();
    let mut reports = Vec::new();
    for (label, fam) in families() {
        if skip.contains(&label) {
            continue;
        }
        let out = run(&fam, op);
        v.report(label, &out.report, budget_s);
        reports.push((label.to_string(), out.report));
    }
    (v, reports)
}

fn max_time(reports: &[(String, RunReport)]) -> f64 {
    reports.iter().map(|(_, r)| r.wall_time_s).fold(0.0, f64::max)
}

fn spray() -> Verdict {
    let (mut v, reports) = suite_over(Operation::SpraySuite, 30.0, &[]);
    let worst = reports
        .iter()
        .filter_map(|(_, r)| value(r, "canonical-spray-residual"))
        .fold(0.0, f64::max);
    let weakest = reports
        .iter()
        .filter_map(|(_, r)| value(r, "corrupted-spray-residual"))
        .fold(f64::INFINITY, f64::min);
    v.notes.push(format!(
        "worst residual/F {worst:.2e}, weakest corrupted {weakest:.2e}, slowest {:.1}s",
        max_time(&reports)
    ));
    v
}

fn geodesic() -> Verdict {
    let (mut v, reports) = suite_over(Operation::GeodesicSuite, 60.0, &[]);
    let get = |n: &str| reports.iter().filter_map(|(_, r)| value(r, n)).fold(0.0, f64::max);
    v.notes.push(format!(
        "drift {:.2e}, rescaling {:.2e}, d exp(0) {:.2e}",
        get("speed-drift"),
        get("rescaling-defect"),
        get("exp-derivative-at-zero")
    ));
    v
}

fn distance() -> Verdict {
    let (mut v, reports) = suite_over(Operation::DistanceSuite, 120.0, &[]);
    let find = |label: &str| &reports.iter().find(|(l, _)| l == label).unwrap().1;
    v.require(find("hyperbolic").check("hyperbolic-closed-form").is_some(), "hyperbolic closed form not run");
    v.require(find("randers-flat").check("randers-asymmetry").is_some(), "flat Randers asymmetry not run");
    let polylines: u64 = reports
        .iter()
        .map(|(_, r)| r.details["polylines"].as_u64().unwrap_or(0))
        .min()
        .unwrap_or(0);
    v.require(polylines >= 200, format!("only {polylines} polylines measured"));
    let get = |n: &str| reports.iter().filter_map(|(_, r)| value(r, n)).fold(f64::NEG_INFINITY, f64::max);
    v.notes.push(format!(
        "law {:.2e}, arccosh {:.2e}, asymmetry {:.2e}, rho - polyline {:.2e}",
        get("geodesic-distance-law"),
        get("hyperbolic-closed-form"),
        get("randers-asymmetry"),
        get("polyline-lower-bound")
    ));
    v
}

fn busemann_mayer() -> Verdict {
    let (mut v, reports) = suite_over(Operation::BusemannMayerSuite, 60.0, &[]);
    let worst = reports
        .iter()
        .filter_map(|(_, r)| value(r, "busemann-mayer-recovery"))
        .fold(0.0, f64::max);
    v.notes.push(format!("worst relative error {worst:.2e}"));
    v
}

fn charts() -> Verdict {
    let (mut v, reports) = suite_over(Operation::DistanceChartSuite, 120.0, &[]);
    let get = |n: &str| reports.iter().filter_map(|(_, r)| value(r, n)).fold(0.0, f64::max);
    v.notes.push(format!(
        "upper/|J| {:.2e}, diagonal {:.2e}, round trip {:.2e}, slowest {:.1}s",
        get("jacobian-triangularity"),
        get("jacobian-diagonal"),
        get("chart-round-trip"),
        max_time(&reports)
    ));
    v
}

fn isometry() -> Verdict {
    let (mut v, reports) = suite_over(Operation::IsometrySuite, 120.0, &[]);
    let find = |label: &str| &reports.iter().find(|(l, _)| l == label).unwrap().1;
    for (fam, name) in [
        ("euclidean", "isometry:rotation(0.7000):isometry-defect"),
        ("euclidean", "isometry:translation(0.3,-0.2):isometry-defect"),
        ("hyperbolic", "isometry:translation(0.3,0):isometry-defect"),
        ("randers-flat", "isometry:translation(0.3,-0.2):isometry-defect"),
        ("euclidean", "non-isometry:scaling(2):isometry-defect"),
        ("euclidean", "non-isometry:shear(1):isometry-defect"),
    ] {
        v.require(find(fam).check(name).is_some(), format!("{fam}: {name} missing"));
    }
    let rot = value(find("randers-flat"), "non-isometry:rotation(1.5708):isometry-defect").unwrap_or(f64::NAN);
    v.require(
        (rot - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-3,
        format!("Randers rotation defect {rot}"),
    );
    v.notes.push(format!("Randers rotation defect {rot:.5}"));
    v
}

fn myers_steenrod() -> Verdict {
    let (mut v, reports) = suite_over(Operation::MyersSteenrodSuite, 180.0, &[]);
    let e = &reports.iter().find(|(l, _)| l == "euclidean").unwrap().1;
    let refusal = e.check("scaling(2):refused-by-distance-audit");
    v.require(
        refusal.is_some_and(|c| c.pass && c.witness.is_some()),
        "scaling not refused with a witness",
    );
    let recovered = reports
        .iter()
        .flat_map(|(_, r)| r.checks.iter())
        .filter(|c| c.name.ends_with(":derivative-recovery"))
        .count();
    v.require(recovered >= 5, format!("only {recovered} derivative recoveries"));
    let worst = reports
        .iter()
        .flat_map(|(_, r)| r.checks.iter())
        .filter(|c| c.name.ends_with(":derivative-recovery") || c.name.ends_with("-defect"))
        .map(|c| c.value)
        .fold(0.0, f64::max);
    v.notes.push(format!("{recovered} isometries recovered, worst error {worst:.2e}"));
    v
}

fn submetry() -> Verdict {
    let (mut v, reports) = suite_over(Operation::SubmetrySuite, 180.0, &[]);
    for (label, r) in &reports {
        v.require(r.check("non-reversible-refused").is_some_and(|c| c.pass), format!("{label}: refusal"));
        let reversible = !label.starts_with("randers");
        let ran = r.check("ball-image-coverage").is_some();
        v.require(ran == reversible, format!("{label}: submetry checks ran = {ran}"));
        if !reversible {
            v.require(r.check("metric-refused").is_some_and(|c| c.pass), format!("{label}: not refused"));
        }
    }
    let get = |n: &str| reports.iter().filter_map(|(_, r)| value(r, n)).fold(0.0, f64::max);
    v.notes.push(format!(
        "coverage gap {:.2e}, sandwich {:.2e}, vs direct {:.2e}, slowest {:.1}s",
        get("ball-image-coverage"),
        get("sandwich-gradient-agreement"),
        get("sandwich-vs-direct-gradient"),
        max_time(&reports)
    ));
    v
}

fn reproducibility() -> Verdict {
    let mut v = Verdict::new();
    let fams = families();
    let mut compared = 0;
    for label in ["euclidean", "randers"] {
        let fam = &fams.iter().find(|(l, _)| *l == label).unwrap().1;
        for op in Operation::ALL {
            if matches!(op, Operation::IsometryVerdict | Operation::MyersSteenrod) {
                continue; // need a map parameter; covered by the suites
            }
            let (a, b) = (run(fam, op), run(fam, op));
            compared += 1;
            v.require(
                a.report.without_timing() == b.report.without_timing(),
                format!("{label}/{op}: reports differ"),
            );
            v.require(a.files == b.files, format!("{label}/{op}: artifacts differ"));
        }
    }
    v.notes.push(format!("{compared} scenario pairs compared"));
    v
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("spray characterization", spray),
        ("geodesics", geodesic),
        ("distance", distance),
        ("Busemann-Mayer", busemann_mayer),
        ("distance charts", charts),
        ("isometries", isometry),
        ("Myers-Steenrod reconstruction", myers_steenrod),
        ("submetries", submetry),
        ("reproducibility", reproducibility),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if filter.as_deref().is_some_and(|p| !name.to_lowercase().contains(&p.to_lowercase())) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {name}: {tag} [{:.1}s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            v.notes.join("; ")
        );
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
