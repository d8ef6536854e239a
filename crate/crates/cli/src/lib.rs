//! Scenario runner: reads a JSON scenario, runs one operation or suite on a
//! metric and writes a report with pass/fail checks.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or the
//! computation itself fails, 2 for configuration errors.

pub mod catalog;
pub mod config;
pub mod ops;
pub mod params;
pub mod report;
pub mod suites;

use std::collections::HashSet;
use std::path::{Component, Path, PathBuf};
use std::time::Instant;

use finsler_core::numcore::sampling::{seeded_rng, SeededRng};
use finsler_core::{FinslerError, FinslerMetric};
use serde::Serialize;
use serde_json::{Map, Value};

pub use catalog::{list_catalog, CatalogEntry};
pub use config::{Operation, Overrides, ScenarioConfig, SCHEMA_VERSION};
pub use report::{Artifact, Check, Checks, Comparison, OutputFile, RunReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] FinslerError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => EXIT_CONFIG,
            HarnessError::Core(_) => EXIT_FAIL,
        }
    }
}

/// Mutable state handed to each operation.
pub struct Ctx {
    pub metric: FinslerMetric,
    pub seed: u64,
    pub checks: Checks,
    pub details: Map<String, Value>,
    pub files: Vec<OutputFile>,
}

impl Ctx {
    pub fn new(metric: FinslerMetric, seed: u64, tol_scale: f64) -> Self {
        Ctx {
            metric,
            seed,
            checks: Checks::new(tol_scale),
            details: Map::new(),
            files: Vec::new(),
        }
    }

    /// Independent stream for one use inside an operation.
    pub fn rng(&self, tag: u64) -> SeededRng {
        seeded_rng(self.seed ^ tag.rotate_left(17))
    }

    pub fn detail<T: Serialize>(&mut self, key: &str, value: T) {
        self.details
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn file(&mut self, name: &str, kind: &str, contents: String) {
        self.files.push(OutputFile {
            file: name.to_string(),
            kind: kind.to_string(),
            contents,
        });
    }
}

fn plain_file_name(name: &str) -> bool {
    let mut parts = Path::new(name).components();
    matches!((parts.next(), parts.next()), (Some(Component::Normal(_)), None))
}

/// Checks everything that can be checked without running: schema version,
/// metric parameters, operation parameters, tolerance scale and the report
/// file name.
pub fn validate_config(cfg: &ScenarioConfig) -> Result<FinslerMetric, HarnessError> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(HarnessError::Config(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    let metric = FinslerMetric::new(cfg.metric.clone()).map_err(|e| HarnessError::Config(format!("metric: {e}")))?;
    params::validate(cfg.operation, &cfg.params)?;
    if !(cfg.tolerances.scale > 0.0 && cfg.tolerances.scale.is_finite()) {
        return Err(HarnessError::Config("tolerances.scale must be positive".into()));
    }
    if !plain_file_name(&cfg.output.report) {
        return Err(HarnessError::Config(format!(
            "output.report must be a plain file name, got {:?}",
            cfg.output.report
        )));
    }
    Ok(metric)
}

/// Refuses scenario sets that would write into the same directory.
pub fn check_distinct_outputs(cfgs: &[ScenarioConfig]) -> Result<(), HarnessError> {
    let mut seen = HashSet::new();
    for c in cfgs {
        let dir = normalize(&c.output.dir);
        if !seen.insert(dir.clone()) {
            return Err(HarnessError::Config(format!(
                "two scenarios share the output directory {}",
                dir.display()
            )));
        }
    }
    Ok(())
}

fn normalize(p: &Path) -> PathBuf {
    let abs = if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().unwrap_or_default().join(p)
    };
    let mut out = PathBuf::new();
    for c in abs.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

/// A finished run: the report plus the artifact files it refers to.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub files: Vec<OutputFile>,
}

fn dispatch(ctx: &mut Ctx, cfg: &ScenarioConfig) -> Result<(), HarnessError> {
    use params::parse;
    let (op, p) = (cfg.operation, &cfg.params);
    match op {
        Operation::ValidateMetric => ops::validate_metric(ctx, parse(op, p)?),
        Operation::NormalRadius => ops::normal_radius_op(ctx, parse(op, p)?),
        Operation::QuasimetricAudit => ops::quasimetric(ctx, parse(op, p)?),
        Operation::DistanceChart => ops::distance_chart(ctx, parse(op, p)?),
        Operation::IsometryVerdict => ops::isometry(ctx, parse(op, p)?),
        Operation::MyersSteenrod => ops::myers_steenrod(ctx, parse(op, p)?),
        Operation::SubmetryBallImage => ops::ball_image(ctx, parse(op, p)?),
        Operation::SubmetryDifferential => ops::differential(ctx, parse(op, p)?),
        Operation::GeodesicPath => ops::geodesic_path(ctx, parse(op, p)?),
        Operation::DistanceAsymmetry => ops::distance_asymmetry(ctx, parse(op, p)?),
        Operation::SpraySuite => suites::spray(ctx, parse(op, p)?),
        Operation::GeodesicSuite => suites::geodesic(ctx, parse(op, p)?),
        Operation::DistanceSuite => suites::distance_suite(ctx, parse(op, p)?),
        Operation::BusemannMayerSuite => suites::busemann_mayer(ctx, parse(op, p)?),
        Operation::DistanceChartSuite => suites::distance_chart(ctx, parse(op, p)?),
        Operation::IsometrySuite => suites::isometry(ctx, parse(op, p)?),
        Operation::MyersSteenrodSuite => suites::myers_steenrod(ctx, parse(op, p)?),
        Operation::SubmetrySuite => suites::submetry(ctx, parse(op, p)?),
    }
}

/// Runs a scenario in memory. Configuration problems are returned as
/// errors; numerical failures end up in the report as a failed check.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    let metric = validate_config(cfg)?;
    let start = Instant::now();
    let mut ctx = Ctx::new(metric, cfg.seed, cfg.tolerances.scale);
    let error = match dispatch(&mut ctx, cfg) {
        Ok(()) => None,
        Err(HarnessError::Core(e)) => {
            ctx.checks.holds("operation-completed", 0.0, false);
            Some(e.to_string())
        }
        Err(e) => return Err(e),
    };
    if ctx.checks.list.is_empty() && error.is_none() {
        ctx.checks.holds("operation-completed", 1.0, true);
    }
    let artifacts = ctx
        .files
        .iter()
        .map(|f| Artifact {
            file: f.file.clone(),
            kind: f.kind.clone(),
            bytes: f.contents.len(),
        })
        .collect();
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: cfg.clone(),
        passed: error.is_none() && ctx.checks.all_pass(),
        checks: ctx.checks.list,
        details: Value::Object(ctx.details),
        artifacts,
        error,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { report, files: ctx.files })
}

/// Creates the output directory; fails before any computation is done.
pub fn prepare_output(cfg: &ScenarioConfig) -> Result<(), HarnessError> {
    std::fs::create_dir_all(&cfg.output.dir)
        .map_err(|e| HarnessError::Io(format!("cannot create {}: {e}", cfg.output.dir.display())))
}

pub fn write_output(cfg: &ScenarioConfig, out: &RunOutput) -> Result<PathBuf, HarnessError> {
    prepare_output(cfg)?;
    let io = |p: &Path, e: std::io::Error| HarnessError::Io(format!("cannot write {}: {e}", p.display()));
    for f in &out.files {
        let path = cfg.output.dir.join(&f.file);
        std::fs::write(&path, &f.contents).map_err(|e| io(&path, e))?;
    }
    let path = cfg.report_path();
    std::fs::write(&path, out.report.to_json()).map_err(|e| io(&path, e))?;
    Ok(path)
}

/// Load, override, validate, run and write one scenario. Returns the exit
/// code together with the report when one was produced.
pub fn run_file(path: &Path, overrides: &Overrides) -> (i32, Result<RunOutput, HarnessError>) {
    let result = ScenarioConfig::load(path).and_then(|c| {
        let c = c.apply(overrides);
        validate_config(&c)?;
        prepare_output(&c)?;
        let out = run_scenario(&c)?;
        write_output(&c, &out)?;
        Ok(out)
    });
    match &result {
        Ok(out) if out.report.passed => (EXIT_PASS, result),
        Ok(_) => (EXIT_FAIL, result),
        Err(e) => (e.exit_code(), result),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &str) -> ScenarioConfig {
        let mut c = ScenarioConfig::from_json(r#"{"schema_version": 1, "metric": {"family": "euclidean"}, "operation": "spray-suite"}"#)
            .unwrap();
        c.output.dir = dir.into();
        c
    }

    #[test]
    fn equivalent_output_paths_collide() {
        assert!(check_distinct_outputs(&[cfg("a/b"), cfg("a/./c/../b")]).is_err());
        assert!(check_distinct_outputs(&[cfg("a/b"), cfg("a/c")]).is_ok());
    }

    #[test]
    fn bad_scale_is_a_config_error() {
        let mut c = cfg("o");
        c.tolerances.scale = -1.0;
        assert_eq!(validate_config(&c).unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn small_run_is_deterministic() {
        let mut c = cfg("o");
        c.params = serde_json::json!({"samples": 5}).as_object().unwrap().clone();
        let (a, b) = (run_scenario(&c).unwrap(), run_scenario(&c).unwrap());
        assert!(a.report.passed);
        assert_eq!(a.report.without_timing(), b.report.without_timing());
    }
}
