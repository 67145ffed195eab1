use std::hint::black_box;

use bhdimer_bench::{short_run, space, sweep_point};
use bhdimer_core::figures::exact_state;
use bhdimer_core::gutzwiller::{kdc_steady_state, rdc_default_seeds, rdc_steady_state, FixedPointOptions};
use bhdimer_core::kerr::{self, KerrParams};
use bhdimer_core::semiclassical::dimer_gaussian_steady_state;
use bhdimer_core::trajectory::{gaussian_ab_trajectory_run, gutzwiller_trajectory_run, trajectory_run};
use bhdimer_core::Basis;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_steady_state");
    g.sample_size(10);
    let p = sweep_point(0.25);
    for n in [6, 8, 10, 12] {
        let s = space(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| b.iter(|| exact_state(black_box(&p), s).unwrap()));
    }
    g.finish();
}

fn closed_forms(c: &mut Criterion) {
    let kp = KerrParams::new(1.0, 1.0, 0.49);
    c.bench_function("kerr_density", |b| b.iter(|| kerr::density(black_box(&kp)).unwrap()));
    c.bench_function("kerr_min_variance", |b| b.iter(|| kerr::min_quadrature_variance(black_box(&kp)).unwrap()));
    let p = sweep_point(1.0);
    c.bench_function("gaussian_dimer", |b| b.iter(|| dimer_gaussian_steady_state(black_box(&p)).unwrap()));
}

fn decoupling(c: &mut Criterion) {
    let mut g = c.benchmark_group("decoupling");
    g.sample_size(10);
    let s = space(10);
    let opts = FixedPointOptions::default();
    for j in [0.1, 2.0] {
        let p = sweep_point(j);
        let seeds = rdc_default_seeds(&p).unwrap();
        g.bench_with_input(BenchmarkId::new("rdc", j), &p, |b, p| b.iter(|| rdc_steady_state(p, &s, &seeds, &opts).unwrap()));
        g.bench_with_input(BenchmarkId::new("kdc", j), &p, |b, p| b.iter(|| kdc_steady_state(p, &s, &opts).unwrap()));
    }
    g.finish();
}

// Four trajectories over ten time units: 4000 steps at the default dt.
fn trajectories(c: &mut Criterion) {
    let mut g = c.benchmark_group("trajectories");
    g.sample_size(10);
    let p = sweep_point(0.25);
    let s = space(10);
    let cfg = short_run(4, 10.0);
    g.bench_function("full_real", |b| b.iter(|| trajectory_run(&p, &s, Basis::Real, &cfg).unwrap()));
    g.bench_function("full_reciprocal", |b| b.iter(|| trajectory_run(&p, &s, Basis::Reciprocal, &cfg).unwrap()));
    g.bench_function("gutzwiller_real", |b| b.iter(|| gutzwiller_trajectory_run(&p, &s, Basis::Real, &cfg).unwrap()));
    g.bench_function("gutzwiller_reciprocal", |b| {
        b.iter(|| gutzwiller_trajectory_run(&p, &s, Basis::Reciprocal, &cfg).unwrap())
    });
    g.bench_function("gaussian_antibonding", |b| b.iter(|| gaussian_ab_trajectory_run(&p, &s, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, exact, closed_forms, decoupling, trajectories);
criterion_main!(benches);
