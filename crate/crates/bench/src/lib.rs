//! Benchmark fixtures: one representative metric per family with a base
//! point, a unit direction and a nearby target.

use finsler_core::{exponential, FinslerMetric};
use nalgebra::DVector;

pub struct Fixture {
    pub name: &'static str,
    pub metric: FinslerMetric,
    pub p: DVector<f64>,
    /// `F(p, v) = 1`.
    pub v: DVector<f64>,
    /// `exp_p(0.5 v)`.
    pub q: DVector<f64>,
}

pub fn fixtures() -> Vec<Fixture> {
    let metrics = [
        ("euclidean", FinslerMetric::euclidean(2)),
        ("minkowski-norm", FinslerMetric::minkowski_norm(2, 1.0).unwrap()),
        ("randers", FinslerMetric::randers_flat(&[0.5, 0.0])),
        ("hyperbolic", FinslerMetric::hyperbolic()),
        ("sphere", FinslerMetric::sphere()),
    ];
    metrics
        .into_iter()
        .map(|(name, metric)| {
            let p = metric.sampling_region().center();
            let u = DVector::from_column_slice(&[0.6, 0.8]);
            let v = &u / metric.evaluate_f(&p, &u).unwrap();
            let q = exponential(&metric, &p, &(&v * 0.5)).unwrap().into_inner();
            Fixture { name, metric, p, v, q }
        })
        .collect()
}
