use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::distance;
use crate::error::{FinslerError, Result};
use crate::geodesics::table_err;
use crate::metrics::FinslerMetric;
use crate::numcore::sampling::seeded_rng;
use crate::numcore::SamplingRegion;
use crate::report::{ValidationReport, Witness, WorstCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ComputedFromMetric,
    External,
}

type Evaluator = dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<f64> + Send + Sync;

/// A (possibly asymmetric) distance `rho(p, q)` on a patch.
#[derive(Clone)]
pub struct QuasiMetricOracle {
    dim: usize,
    evaluator: Arc<Evaluator>,
    /// Declared symmetry.
    pub symmetric: bool,
    pub provenance: Provenance,
}

impl fmt::Debug for QuasiMetricOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuasiMetricOracle")
            .field("dim", &self.dim)
            .field("symmetric", &self.symmetric)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl QuasiMetricOracle {
    /// The local distance of a metric.
    pub fn from_metric(m: FinslerMetric) -> Self {
        let symmetric = m.is_reversible();
        let dim = m.dim();
        QuasiMetricOracle {
            dim,
            evaluator: Arc::new(move |p, q| distance(&m, p, q)),
            symmetric,
            provenance: Provenance::ComputedFromMetric,
        }
    }

    pub fn from_fn<F>(dim: usize, symmetric: bool, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> Result<f64> + Send + Sync + 'static,
    {
        QuasiMetricOracle {
            dim,
            evaluator: Arc::new(f),
            symmetric,
            provenance: Provenance::External,
        }
    }

    /// `rho - shift`; breaks the identity axiom for any `shift != 0`.
    pub fn shifted(&self, shift: f64) -> Self {
        let inner = self.evaluator.clone();
        QuasiMetricOracle {
            dim: self.dim,
            evaluator: Arc::new(move |p, q| Ok(inner(p, q)? - shift)),
            symmetric: self.symmetric,
            provenance: Provenance::External,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
        if p.len() != self.dim || q.len() != self.dim {
            return Err(FinslerError::DimensionMismatch {
                expected: self.dim,
                got: if p.len() != self.dim { p.len() } else { q.len() },
            });
        }
        (self.evaluator)(p, q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub rho: f64,
}

/// Sampled values of an oracle, exchangeable as CSV with columns
/// `p1..pn,q1..qn,rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    pub dim: usize,
    pub rows: Vec<TableRow>,
}

impl DistanceTable {
    pub fn sample(oracle: &QuasiMetricOracle, pairs: &[(DVector<f64>, DVector<f64>)]) -> Result<Self> {
        let rows = pairs
            .iter()
            .map(|(p, q)| {
                Ok(TableRow {
                    p: p.iter().cloned().collect(),
                    q: q.iter().cloned().collect(),
                    rho: oracle.eval(p, q)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DistanceTable {
            dim: oracle.dim(),
            rows,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.dim;
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
        header.extend((1..=n).map(|i| format!("q{i}")));
        header.push("rho".into());
        w.write_record(&header).map_err(table_err)?;
        for r in &self.rows {
            let vals = r.p.iter().chain(&r.q).chain(std::iter::once(&r.rho));
            w.write_record(vals.map(|v| format!("{v:e}"))).map_err(table_err)?;
        }
        w.flush().map_err(|e| FinslerError::Table(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers().map_err(table_err)?.clone();
        let cols = headers.len();
        if cols < 3 || cols % 2 == 0 || headers.get(cols - 1) != Some("rho") {
            return Err(FinslerError::Table(format!("unexpected header {headers:?}")));
        }
        let n = (cols - 1) / 2;
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(table_err)?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| FinslerError::Table(e.to_string()))?;
            if vals.len() != cols {
                return Err(FinslerError::Table("ragged row".into()));
            }
            rows.push(TableRow {
                p: vals[..n].to_vec(),
                q: vals[n..2 * n].to_vec(),
                rho: vals[2 * n],
            });
        }
        Ok(DistanceTable { dim: n, rows })
    }

    /// Oracle answering only the tabulated pairs (matched within `tol` in
    /// the max norm); other queries are oracle errors.
    pub fn into_oracle(self, symmetric: bool, tol: f64) -> QuasiMetricOracle {
        let dim = self.dim;
        let close = move |a: &[f64], b: &DVector<f64>| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol);
        QuasiMetricOracle::from_fn(dim, symmetric, move |p, q| {
            if p == q {
                return Ok(0.0);
            }
            self.rows
                .iter()
                .find(|r| close(&r.p, p) && close(&r.q, q))
                .map(|r| r.rho)
                .ok_or_else(|| FinslerError::Oracle(format!("pair ({:?}, {:?}) not tabulated", p.as_slice(), q.as_slice())))
        })
    }
}

const TRIANGLE_SLACK: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-8;

fn witness(label: &str, parts: &[&[f64]]) -> Witness {
    Witness {
        description: label.to_string(),
        values: parts.iter().flat_map(|p| p.iter().cloned()).collect(),
    }
}

/// Sampled quasi-metric axioms on points drawn from `region`: non-negativity,
/// identity of indiscernibles and the triangle inequality. Symmetry is
/// measured and compared with the oracle's declared flag.
pub fn quasimetric_audit(
    rho: &QuasiMetricOracle,
    region: &SamplingRegion,
    n_pairs: usize,
    n_triples: usize,
    seed: u64,
) -> ValidationReport {
    let mut rng = seeded_rng(seed);
    let mut nonneg = WorstCase::default();
    let mut nonneg_ok = true;
    let mut identity = WorstCase::default();
    let mut identity_ok = true;
    let mut triangle = WorstCase::default();
    let mut triangle_ok = true;
    let mut asym = WorstCase::default();
    let mut failures = WorstCase::default();

    let eval = |p: &DVector<f64>, q: &DVector<f64>, failures: &mut WorstCase| -> Option<f64> {
        match rho.eval(p, q) {
            Ok(d) if d.is_finite() => Some(d),
            _ => {
                failures.observe(f64::INFINITY, || witness("p, q (oracle failed)", &[p.as_slice(), q.as_slice()]));
                None
            }
        }
    };

    for _ in 0..n_pairs.max(1) {
        let p = region.sample(&mut rng);
        let q = region.sample(&mut rng);
        let (ps, qs) = (p.as_slice(), q.as_slice());
        let Some(pq) = eval(&p, &q, &mut failures) else { continue };
        let Some(qp) = eval(&q, &p, &mut failures) else { continue };
        let Some(pp) = eval(&p, &p, &mut failures) else { continue };
        for d in [pq, qp] {
            if d < 0.0 {
                nonneg_ok = false;
                nonneg.observe(-d, || witness("p, q, rho(p,q)", &[ps, qs, &[d]]));
            }
        }
        if pp.abs() > IDENTITY_TOL {
            identity_ok = false;
            identity.observe(pp, || witness("p, rho(p,p)", &[ps, &[pp]]));
        }
        if pp < 0.0 {
            nonneg_ok = false;
            nonneg.observe(-pp, || witness("p, rho(p,p)", &[ps, &[pp]]));
        }
        if p != q && pq <= 0.0 {
            identity_ok = false;
            identity.observe(pq.abs().max(f64::MIN_POSITIVE), || witness("p, q, rho(p,q) for p != q", &[ps, qs, &[pq]]));
        }
        let rel = (pq - qp).abs() / (0.5 * (pq.abs() + qp.abs())).max(f64::MIN_POSITIVE);
        asym.observe(rel, || witness("p, q, rho(p,q), rho(q,p)", &[ps, qs, &[pq, qp]]));
    }

    for _ in 0..n_triples {
        let a = region.sample(&mut rng);
        let b = region.sample(&mut rng);
        let c = region.sample(&mut rng);
        let (Some(ab), Some(bc), Some(ac)) =
            (eval(&a, &b, &mut failures), eval(&b, &c, &mut failures), eval(&a, &c, &mut failures))
        else {
            continue;
        };
        let excess = ac - ab - bc;
        if excess > TRIANGLE_SLACK {
            triangle_ok = false;
        }
        triangle.observe(excess.max(0.0), || {
            witness("a, b, c, rho(a,c) - rho(a,b) - rho(b,c)", &[a.as_slice(), b.as_slice(), c.as_slice(), &[excess]])
        });
    }

    let symmetric = asym.value <= SYMMETRY_TOL;
    let symmetry_witness = if symmetric { None } else { asym.witness.clone() };
    let evaluated = failures.witness.is_none();
    ValidationReport {
        seed,
        samples: n_pairs.max(1) + n_triples,
        checks: vec![
            failures.into_check("evaluation", evaluated),
            nonneg.into_check("non-negativity", nonneg_ok),
            identity.into_check("identity", identity_ok),
            triangle.into_check("triangle-inequality", triangle_ok),
            asym.into_check("symmetry-claim", symmetric == rho.symmetric),
        ],
        symmetric: Some(symmetric),
        symmetry_witness,
    }
}
