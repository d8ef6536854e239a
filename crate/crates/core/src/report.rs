use serde::{Deserialize, Serialize};

/// A counterexample attached to a failed (or informative) check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub description: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst residual seen over the samples; never negative.
    pub worst_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Result of a sampled axiom audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckOutcome>,
    /// Observed symmetry (reversibility) of the audited object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_witness: Option<Witness>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Running maximum of a residual with the sample that produced it.
#[derive(Debug, Clone, Default)]
pub(crate) struct WorstCase {
    pub value: f64,
    pub witness: Option<Witness>,
}

impl WorstCase {
    pub fn observe(&mut self, residual: f64, describe: impl FnOnce() -> Witness) {
        let r = if residual.is_nan() { f64::INFINITY } else { residual.abs() };
        if r > self.value || (self.witness.is_none() && r > 0.0) {
            self.value = r;
            self.witness = Some(describe());
        }
    }

    pub fn into_check(self, name: &str, passed: bool) -> CheckOutcome {
        CheckOutcome {
            name: name.to_string(),
            passed,
            worst_residual: self.value,
            witness: self.witness,
        }
    }
}
