use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use finsler_bench::fixtures;
use finsler_core::distance::default_tol;
use finsler_core::{build_distance_chart, distance, exponential, invert_exp, spray_coefficients};

fn spray(c: &mut Criterion) {
    let mut g = c.benchmark_group("spray_coefficients");
    for f in fixtures() {
        g.bench_with_input(BenchmarkId::from_parameter(f.name), &f, |b, f| {
            b.iter(|| spray_coefficients(&f.metric, black_box(&f.p), black_box(&f.v)).unwrap())
        });
    }
    g.finish();
}

fn exp_map(c: &mut Criterion) {
    let mut g = c.benchmark_group("exponential");
    for f in fixtures() {
        let v = &f.v * 0.5;
        g.bench_with_input(BenchmarkId::from_parameter(f.name), &f, |b, f| {
            b.iter(|| exponential(&f.metric, black_box(&f.p), black_box(&v)).unwrap())
        });
    }
    g.finish();
}

fn shooting(c: &mut Criterion) {
    let mut g = c.benchmark_group("invert_exp");
    for f in fixtures() {
        g.bench_with_input(BenchmarkId::from_parameter(f.name), &f, |b, f| {
            b.iter(|| invert_exp(&f.metric, black_box(&f.p), black_box(&f.q), default_tol(&f.q)).unwrap())
        });
    }
    g.finish();
    let f = &fixtures()[3];
    c.bench_function("distance/hyperbolic", |b| b.iter(|| distance(&f.metric, &f.p, black_box(&f.q)).unwrap()));
}

fn charts(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_distance_chart");
    g.sample_size(10);
    for f in fixtures().into_iter().filter(|f| f.name == "euclidean" || f.name == "hyperbolic") {
        g.bench_with_input(BenchmarkId::from_parameter(f.name), &f, |b, f| {
            b.iter(|| build_distance_chart(&f.metric, black_box(&f.p), 0.5, 1).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, spray, exp_map, shooting, charts);
criterion_main!(benches);
