//! Run reports and the pass/fail checks they carry.

use finsler_core::Witness;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `value <= threshold`
    AtMost,
    /// `value >= threshold`
    AtLeast,
    /// Boolean outcome; `value` is informational.
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub comparison: Comparison,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Check list with the tolerance scale applied to upper bounds.
#[derive(Debug, Clone)]
pub struct Checks {
    scale: f64,
    pub list: Vec<Check>,
}

impl Checks {
    pub fn new(scale: f64) -> Self {
        Checks { scale, list: Vec::new() }
    }

    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> bool {
        let t = threshold * self.scale;
        let pass = value <= t;
        self.push(name.into(), value, Some(t), Comparison::AtMost, pass, None)
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> bool {
        let pass = value >= threshold;
        self.push(name.into(), value, Some(threshold), Comparison::AtLeast, pass, None)
    }

    pub fn holds(&mut self, name: impl Into<String>, value: f64, pass: bool) -> bool {
        self.push(name.into(), value, None, Comparison::Holds, pass, None)
    }

    pub fn holds_with(&mut self, name: impl Into<String>, value: f64, pass: bool, witness: Witness) -> bool {
        self.push(name.into(), value, None, Comparison::Holds, pass, Some(witness))
    }

    /// Attach a witness to the most recent check.
    pub fn witness(&mut self, w: Witness) {
        if let Some(c) = self.list.last_mut() {
            c.witness = Some(w);
        }
    }

    fn push(
        &mut self,
        name: String,
        value: f64,
        threshold: Option<f64>,
        comparison: Comparison,
        pass: bool,
        witness: Option<Witness>,
    ) -> bool {
        // JSON has no NaN; a NaN value is reported as infinite and fails.
        let (value, pass) = if value.is_nan() { (f64::INFINITY, false) } else { (value, pass) };
        self.list.push(Check {
            name,
            value,
            threshold,
            comparison,
            pass,
            witness,
        });
        pass
    }

    pub fn all_pass(&self) -> bool {
        self.list.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name inside the output directory.
    pub file: String,
    pub kind: String,
    pub bytes: usize,
}

/// A file produced by a run, written next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub file: String,
    pub kind: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    /// The effective scenario, after command-line overrides.
    pub scenario: ScenarioConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub details: Value,
    pub artifacts: Vec<Artifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// JSON with the timing field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> String {
        RunReport {
            wall_time_s: 0.0,
            ..self.clone()
        }
        .to_json()
    }
}
