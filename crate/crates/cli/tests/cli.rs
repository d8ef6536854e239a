use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

fn finsler() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
}

fn write_config(dir: &Path, name: &str, cfg: Value) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn scenario(out: &Path, operation: &str, params: Value) -> Value {
    json!({
        "schema_version": 1,
        "metric": {"family": "euclidean", "dim": 2},
        "operation": operation,
        "params": params,
        "seed": 11,
        "output": {"dir": out}
    })
}

#[test]
fn geodesic_suite_passes_with_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "s.json", scenario(&out, "geodesic-suite", json!({"rescaling_pairs": 5})));
    let st = finsler().arg("run").arg(&cfg).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], json!(true));
    assert!(report["wall_time_s"].is_number());
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["pass"] == json!(true)));
}

#[test]
fn myers_steenrod_writes_the_derivative() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ms");
    let cfg = write_config(
        tmp.path(),
        "ms.json",
        scenario(&out, "myers-steenrod", json!({"map": {"map": "rotation", "angle": 0.4}})),
    );
    assert_eq!(finsler().arg("run").arg(&cfg).status().unwrap().code(), Some(0));
    let csv = std::fs::read_to_string(out.join("derivative.csv")).unwrap();
    let first: Vec<f64> = csv.lines().next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((first[0] - 0.4f64.cos()).abs() < 1e-3);
    assert!((first[1] + 0.4f64.sin()).abs() < 1e-3);
}

#[test]
fn refused_scaling_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        scenario(&out, "myers-steenrod", json!({"map": {"map": "scaling", "factor": 2.0}})),
    );
    assert_eq!(finsler().arg("run").arg(&cfg).status().unwrap().code(), Some(1));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["checks"][0]["witness"]["values"].as_array().unwrap().len() >= 6);
}

#[test]
fn non_reversible_submetry_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nr");
    let mut cfg = scenario(&out, "submetry-ball-image", json!({"samples": 10}));
    cfg["metric"] = json!({"family": "randers", "drift": [0.5, 0.0]});
    let path = write_config(tmp.path(), "nr.json", cfg);
    assert_eq!(finsler().arg("run").arg(&path).status().unwrap().code(), Some(1));
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("not reversible"));
}

#[test]
fn configuration_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        json!({"schema_version": 1, "metric": {"family": "nosuch"}, "operation": "spray-suite"}),
        json!({"schema_version": 1, "metric": {"family": "euclidean"}, "operation": "no-such-op"}),
        json!({"schema_version": 1, "metric": {"family": "euclidean"}, "operation": "spray-suite", "params": {"bogus": 1}}),
        json!({"schema_version": 9, "metric": {"family": "euclidean"}, "operation": "spray-suite"}),
        json!({"schema_version": 1, "metric": {"family": "randers", "drift": [2.0, 0.0]}, "operation": "spray-suite"}),
        json!({"schema_version": 1, "metric": {"family": "euclidean"}, "operation": "isometry-verdict"}),
    ];
    for (i, c) in cases.into_iter().enumerate() {
        let path = write_config(tmp.path(), &format!("c{i}.json"), c);
        let st = finsler().arg("run").arg(&path).current_dir(tmp.path()).status().unwrap();
        assert_eq!(st.code(), Some(2), "case {i}");
    }
    let st = finsler().arg("run").arg(tmp.path().join("missing.json")).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn shared_output_directories_are_refused_upfront() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("same");
    let a = write_config(tmp.path(), "a.json", scenario(&out, "spray-suite", json!({"samples": 3})));
    let b = write_config(tmp.path(), "b.json", scenario(&out, "busemann-mayer-suite", json!({"pairs": 2})));
    assert_eq!(finsler().arg("run").arg(&a).arg(&b).status().unwrap().code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn overrides_and_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "a.json",
        scenario(&tmp.path().join("ignored"), "distance-asymmetry", json!({"pairs": 4})),
    );
    let mut reports = Vec::new();
    for dir in ["r1", "r2"] {
        let out = tmp.path().join(dir);
        let st = finsler()
            .args(["run", "--seed", "5", "--tol-scale", "2", "--out"])
            .arg(&out)
            .arg(&cfg)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
        let mut r: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(r["scenario"]["seed"], json!(5));
        assert_eq!(r["scenario"]["tolerances"]["scale"], json!(2.0));
        r["wall_time_s"] = json!(0.0);
        r["scenario"]["output"]["dir"] = json!("");
        reports.push((r, std::fs::read_to_string(out.join("distance_asymmetry.csv")).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    assert!(!tmp.path().join("ignored").exists());
    assert!(reports[0].1.starts_with("p1,p2,q1,q2,rho_pq,rho_qp,asymmetry\n"));
}

#[test]
fn catalog_filters() {
    let out = finsler().args(["catalog", "submetry"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ops = text.split("suites:").next().unwrap();
    assert_eq!(ops.matches("  submetry-").count(), 2, "{text}");

    let out = finsler().args(["catalog", "--json"]).output().unwrap();
    let entries: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    let count = |kind: &str| entries.iter().filter(|e| e["kind"] == json!(kind)).count();
    assert_eq!(count("family"), 6);
    assert_eq!(count("suite"), 8);
    for suite in ["spray", "geodesic", "distance", "busemann-mayer", "distance-chart", "isometry", "myers-steenrod", "submetry"] {
        assert!(entries.iter().any(|e| e["name"] == json!(format!("{suite}-suite"))));
    }
}
