use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rjd_bench::{unit_shift, varying_drift};
use rjd_core::rate::optimize_lambda;
use rjd_core::sim::{simulate_coupled_pair, simulate_rjd};
use rjd_core::verify::{v_gap_series, Pairing};
use rjd_core::SimConfig;

fn rate(c: &mut Criterion) {
    let exact = unit_shift();
    let grid = varying_drift();
    c.bench_function("optimize_lambda/x_independent", |b| {
        b.iter(|| optimize_lambda(black_box(&exact)).unwrap())
    });
    c.bench_function("optimize_lambda/grid_supremum", |b| {
        b.iter(|| optimize_lambda(black_box(&grid)).unwrap())
    });
}

fn paths(c: &mut Criterion) {
    let m = unit_shift();
    let mut g = c.benchmark_group("paths");
    g.sample_size(20);
    g.bench_function("simulate_rjd/T=10,dt=1e-3", |b| {
        b.iter(|| simulate_rjd(&m, 1.0, 10.0, 1e-3, black_box(7)).unwrap())
    });
    g.bench_function("coupled_pair/T=10,dt=1e-3", |b| {
        b.iter(|| simulate_coupled_pair(&m, 0.0, 2.0, 10.0, 1e-3, black_box(7)).unwrap())
    });
    let cfg = SimConfig::new(1e-3);
    g.bench_function("v_gap_series/1000 pairs,T=1", |b| {
        b.iter(|| v_gap_series(&m, 0.0, 2.0, 0.44, &[0.5, 1.0], 1000, &cfg, black_box(7), Pairing::Auto).unwrap())
    });
    g.finish();
}

criterion_group!(benches, rate, paths);
criterion_main!(benches);
