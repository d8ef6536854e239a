//! Scenario configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use finsler_core::MetricFamily;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub metric: MetricFamily,
    pub operation: Operation,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Multiplies every upper-bound threshold. Lower bounds (separation
/// checks such as "the corrupted spray is flagged") are not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Directory receiving the report and any artifacts.
    pub dir: PathBuf,
    pub report: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            report: "report.json".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    ValidateMetric,
    NormalRadius,
    QuasimetricAudit,
    DistanceChart,
    IsometryVerdict,
    MyersSteenrod,
    SubmetryBallImage,
    SubmetryDifferential,
    GeodesicPath,
    DistanceAsymmetry,
    SpraySuite,
    GeodesicSuite,
    DistanceSuite,
    BusemannMayerSuite,
    DistanceChartSuite,
    IsometrySuite,
    MyersSteenrodSuite,
    SubmetrySuite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperationKind {
    Operation,
    Experiment,
    Suite,
}

impl Operation {
    pub const ALL: [Operation; 18] = [
        Operation::ValidateMetric,
        Operation::NormalRadius,
        Operation::QuasimetricAudit,
        Operation::DistanceChart,
        Operation::IsometryVerdict,
        Operation::MyersSteenrod,
        Operation::SubmetryBallImage,
        Operation::SubmetryDifferential,
        Operation::GeodesicPath,
        Operation::DistanceAsymmetry,
        Operation::SpraySuite,
        Operation::GeodesicSuite,
        Operation::DistanceSuite,
        Operation::BusemannMayerSuite,
        Operation::DistanceChartSuite,
        Operation::IsometrySuite,
        Operation::MyersSteenrodSuite,
        Operation::SubmetrySuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operation::ValidateMetric => "validate-metric",
            Operation::NormalRadius => "normal-radius",
            Operation::QuasimetricAudit => "quasimetric-audit",
            Operation::DistanceChart => "distance-chart",
            Operation::IsometryVerdict => "isometry-verdict",
            Operation::MyersSteenrod => "myers-steenrod",
            Operation::SubmetryBallImage => "submetry-ball-image",
            Operation::SubmetryDifferential => "submetry-differential",
            Operation::GeodesicPath => "geodesic-path",
            Operation::DistanceAsymmetry => "distance-asymmetry",
            Operation::SpraySuite => "spray-suite",
            Operation::GeodesicSuite => "geodesic-suite",
            Operation::DistanceSuite => "distance-suite",
            Operation::BusemannMayerSuite => "busemann-mayer-suite",
            Operation::DistanceChartSuite => "distance-chart-suite",
            Operation::IsometrySuite => "isometry-suite",
            Operation::MyersSteenrodSuite => "myers-steenrod-suite",
            Operation::SubmetrySuite => "submetry-suite",
        }
    }

    pub fn kind(self) -> OperationKind {
        match self {
            Operation::GeodesicPath | Operation::DistanceAsymmetry => OperationKind::Experiment,
            Operation::SpraySuite
            | Operation::GeodesicSuite
            | Operation::DistanceSuite
            | Operation::BusemannMayerSuite
            | Operation::DistanceChartSuite
            | Operation::IsometrySuite
            | Operation::MyersSteenrodSuite
            | Operation::SubmetrySuite => OperationKind::Suite,
            _ => OperationKind::Operation,
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Operation::ValidateMetric => "sampled positivity, homogeneity, ellipticity and reversibility audit",
            Operation::NormalRadius => "numerical normal radius at a point",
            Operation::QuasimetricAudit => "quasi-metric axioms of the induced distance",
            Operation::DistanceChart => "build and certify a distance chart, written as JSON",
            Operation::IsometryVerdict => "isometry, spray push-forward and geodesic-image defects of a map",
            Operation::MyersSteenrod => "derivative of a distance-preserving map from point values",
            Operation::SubmetryBallImage => "image of a small ball under a distance function",
            Operation::SubmetryDifferential => "gradient of a distance function from the sandwich construction",
            Operation::GeodesicPath => "integrate one geodesic and write its samples as CSV",
            Operation::DistanceAsymmetry => "rho(p,q) against rho(q,p) on seeded pairs, as CSV",
            Operation::SpraySuite => "residuals of the canonical and a corrupted spray",
            Operation::GeodesicSuite => "speed conservation, rescaling, derivative of exp at 0",
            Operation::DistanceSuite => "geodesic-distance law, closed forms, polyline lower bound",
            Operation::BusemannMayerSuite => "F recovered from distances along curves",
            Operation::DistanceChartSuite => "triangular Jacobian, diagonal and round trip of charts",
            Operation::IsometrySuite => "built-in isometries accepted, non-isometries rejected",
            Operation::MyersSteenrodSuite => "derivative recovery for isometries, refusal for non-isometries",
            Operation::SubmetrySuite => "ball images and differentials of distance functions",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("invalid scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.tol_scale {
            self.tolerances.scale = t;
        }
        self
    }

    pub fn report_path(&self) -> PathBuf {
        self.output.dir.join(&self.output.report)
    }
}
