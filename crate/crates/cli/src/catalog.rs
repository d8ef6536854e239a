//! Listing of metric families, operations, experiments and suites.

use std::fmt::Write as _;

use finsler_core::MetricFamily;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Operation, OperationKind};
use crate::params;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Family,
    Operation,
    Experiment,
    Suite,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub kind: EntryKind,
    pub name: String,
    pub summary: String,
    /// Example descriptor for families, parameter defaults otherwise.
    pub params: Value,
}

fn family_entry(name: &str) -> CatalogEntry {
    let (summary, example) = match name {
        "euclidean" => ("F = |y|", json!({"family": "euclidean", "dim": 2})),
        "minkowski-norm" => (
            "quartic norm (sum y_i^4 + kappa |y|^4)^(1/4), constant in x",
            json!({"family": "minkowski-norm", "dim": 2, "kappa": 1.0}),
        ),
        "riemannian" => (
            "exp(<c,x> + s|x|^2/2) sqrt(y^T A y)",
            json!({"family": "riemannian", "coefficients": [[2.0, 0.5], [0.5, 1.0]], "conformal_linear": [0.1, 0.0], "conformal_quadratic": 0.05}),
        ),
        "randers" => (
            "sqrt(y^T A y) + <b + B x, y>, non-reversible",
            json!({"family": "randers", "drift": [0.5, 0.0]}),
        ),
        "hyperbolic-half-plane" => (
            "scale |y| / x_n on the upper half-space",
            json!({"family": "hyperbolic-half-plane", "dim": 2, "scale": 1.0}),
        ),
        "round-sphere-patch" => (
            "stereographic chart of the round sphere, 2R|y|/(1+|x|^2)",
            json!({"family": "round-sphere-patch", "dim": 2, "radius": 1.0, "chart_radius": 20.0}),
        ),
        _ => ("", Value::Null),
    };
    CatalogEntry {
        kind: EntryKind::Family,
        name: name.to_string(),
        summary: summary.to_string(),
        params: example,
    }
}

/// All entries whose name contains `filter` (case-insensitive).
pub fn list_catalog(filter: Option<&str>) -> Vec<CatalogEntry> {
    let mut out: Vec<CatalogEntry> = MetricFamily::NAMES.iter().map(|n| family_entry(n)).collect();
    for op in Operation::ALL {
        out.push(CatalogEntry {
            kind: match op.kind() {
                OperationKind::Operation => EntryKind::Operation,
                OperationKind::Experiment => EntryKind::Experiment,
                OperationKind::Suite => EntryKind::Suite,
            },
            name: op.name().to_string(),
            summary: op.summary().to_string(),
            params: params::defaults(op),
        });
    }
    match filter {
        Some(f) => {
            let f = f.to_lowercase();
            out.into_iter().filter(|e| e.name.contains(&f)).collect()
        }
        None => out,
    }
}

pub fn render(entries: &[CatalogEntry]) -> String {
    let mut s = String::new();
    for (kind, title) in [
        (EntryKind::Family, "families"),
        (EntryKind::Operation, "operations"),
        (EntryKind::Experiment, "experiments"),
        (EntryKind::Suite, "suites"),
    ] {
        let group: Vec<_> = entries.iter().filter(|e| e.kind == kind).collect();
        if group.is_empty() {
            continue;
        }
        let _ = writeln!(s, "{title}:");
        for e in group {
            let _ = writeln!(s, "  {:<24} {}", e.name, e.summary);
            if kind != EntryKind::Family {
                if let Value::Object(map) = &e.params {
                    let parts: Vec<String> = map.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    if !parts.is_empty() {
                        let _ = writeln!(s, "  {:<24}   params: {}", "", parts.join(" "));
                    }
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lists_everything_once() {
        let all = list_catalog(None);
        assert_eq!(all.len(), MetricFamily::NAMES.len() + Operation::ALL.len());
        assert!(list_catalog(Some("BUSEMANN")).iter().all(|e| e.name.contains("busemann")));
        assert!(render(&all).contains("suites:"));
    }
}
