//! Hot kernels on the path this build was compiled with.
//!
//! `cargo bench -p riccilab` measures the rayon path (and, for reference,
//! the same code on a one-thread pool); `cargo bench -p riccilab
//! --no-default-features` measures the sequential fallback. Both write to
//! the same benchmark ids under a `rayon`/`sequential` label, so criterion's
//! reports line them up.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use riccilab::flow::{step_rdt, FlowState, Scheme};
use riccilab::geometry::{ricci_deturck_rhs, scalar_curvature};
use riccilab::initial_data::{generate, Family, GeneratorSpec};
use riccilab::{GridSpec, MetricField};

const PATH: &str = if cfg!(feature = "parallel") { "rayon" } else { "sequential" };

fn random_metric(dim: usize, n: usize) -> MetricField {
    let grid = GridSpec::new(dim, n, std::f64::consts::TAU).unwrap();
    let mut spec = GeneratorSpec::new(Family::RandomSmooth, 0.05);
    spec.seed = 1;
    generate(&grid, &spec).unwrap().primary().clone()
}

/// A pool to run the kernels in (rayon builds only).
#[cfg(feature = "parallel")]
type Pool = Option<rayon::ThreadPool>;
#[cfg(not(feature = "parallel"))]
type Pool = Option<()>;

/// Runs `f` inside `pool` when one is given.
fn within<R: Send>(pool: &Pool, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        #[cfg(feature = "parallel")]
        Some(p) => p.install(f),
        _ => f(),
    }
}

fn kernels(c: &mut Criterion, label: &str, pool: &Pool) {
    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (dim, n) in [(2, 128), (3, 32)] {
        let g = random_metric(dim, n);
        let bg = MetricField::flat(*g.grid());
        let size = format!("{dim}d-{n}");
        group.bench_with_input(BenchmarkId::new(format!("scalar_curvature/{label}"), &size), &g, |b, g| {
            b.iter(|| within(pool, || scalar_curvature(black_box(g)).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new(format!("rdt_rhs/{label}"), &size), &g, |b, g| {
            b.iter(|| within(pool, || ricci_deturck_rhs(black_box(g), &bg).unwrap()))
        });
        let state = FlowState::new(0.0, g.clone(), bg.clone()).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("rk2_step/{label}"), &size), &state, |b, s| {
            b.iter(|| within(pool, || step_rdt(black_box(s), 1e-4, Scheme::ExplicitRk2).unwrap()))
        });
    }
    group.finish();
}

fn bench(c: &mut Criterion) {
    kernels(c, PATH, &None);
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        kernels(c, "rayon-1-thread", &Some(pool));
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
