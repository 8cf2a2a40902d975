//! Spectral kernels on the configured backend. Build with
//! `--no-default-features` for the sequential fallback; with `parallel` the
//! same kernels also run inside a one-thread rayon pool for comparison.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dampgap::solver::Stepper;
use dampgap::spectral::{forward_transform, inverse_transform};
use dampgap::{CauchyState, Grid, InitialData, Propagator, SimConfig};

const BACKEND: &str = if cfg!(feature = "parallel") { "rayon" } else { "sequential" };

fn cases() -> Vec<(&'static str, Grid)> {
    vec![
        ("2d-256", Grid::new(2, 256, 20.0).unwrap()),
        ("3d-32", Grid::new(3, 32, 12.0).unwrap()),
        ("3d-64", Grid::new(3, 64, 24.0).unwrap()),
    ]
}

fn setup(grid: Grid) -> (SimConfig, CauchyState) {
    let u1 = InitialData::gaussian(2.0, 0.1).sample(&grid).unwrap();
    let cfg = SimConfig::new(grid, 1.0, 0.25, 2.5, 0.1, 1.0);
    let state = CauchyState::from_initial_velocity(&u1).unwrap();
    (cfg, state)
}

#[cfg(feature = "parallel")]
type Pool = rayon::ThreadPool;

#[cfg(not(feature = "parallel"))]
struct Pool;

#[cfg(not(feature = "parallel"))]
impl Pool {
    fn install<R>(&self, f: impl FnOnce() -> R) -> R {
        f()
    }
}

/// The configured backend, plus a one-thread rayon pool when available.
fn backends() -> Vec<(&'static str, Option<Pool>)> {
    #[allow(unused_mut)]
    let mut out = vec![(BACKEND, None)];
    #[cfg(feature = "parallel")]
    out.push(("rayon-1thread", Some(rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())));
    out
}

fn run<R: Send>(pool: &Option<Pool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    for (label, grid) in cases() {
        let field = InitialData::gaussian(2.0, 1.0).sample(&grid).unwrap();
        for (backend, pool) in &backends() {
            group.bench_function(BenchmarkId::new(*backend, label), |b| {
                b.iter(|| run(pool, || inverse_transform(&forward_transform(black_box(&field)).unwrap()).unwrap()))
            });
        }
    }
    group.finish();
}

fn propagator(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagator_apply");
    for (label, grid) in cases() {
        let (cfg, state) = setup(grid);
        let prop = Propagator::new(grid, cfg.orders().unwrap(), cfg.dt).unwrap();
        for (backend, pool) in &backends() {
            group.bench_function(BenchmarkId::new(*backend, label), |b| {
                b.iter(|| run(pool, || prop.apply(black_box(&state)).unwrap()))
            });
        }
    }
    group.finish();
}

fn stepper(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonlinear_step");
    group.sample_size(20);
    for (label, grid) in cases() {
        let (cfg, state) = setup(grid);
        let stepper = Stepper::new(&cfg, cfg.dt).unwrap();
        for (backend, pool) in &backends() {
            group.bench_function(BenchmarkId::new(*backend, label), |b| {
                b.iter(|| run(pool, || stepper.step(black_box(&state)).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, fft, propagator, stepper);
criterion_main!(benches);
