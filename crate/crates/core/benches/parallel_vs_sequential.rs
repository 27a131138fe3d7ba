//! Sequential versus rayon execution of the data-parallel kernels.
//!
//! Built without the `parallel` feature, both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use esgtev::empirical::betas::benchmark_residual_betas_with;
use esgtev::empirical::pipeline::{prepare, PipelineConfig};
use esgtev::frontier::frontier_sweep_with;
use esgtev::linalg::linspace;
use esgtev::synth::{generate, SynthConfig};
use esgtev::verify::{instance_rng, oracle_suite, random_benchmark, random_universe};
use esgtev::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn frontier_sweep(c: &mut Criterion) {
    let mut rng = instance_rng(1, 0);
    let n = 60;
    let universe = random_universe(&mut rng, n).unwrap();
    let benchmark = random_benchmark(&mut rng, n).unwrap();
    let grid = linspace(-0.1, 0.1, 4001);
    let mut group = c.benchmark_group("frontier_sweep");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, grid.len()), |b| {
            b.iter(|| {
                frontier_sweep_with(&universe, &benchmark, black_box(&grid), 0.01, exec).unwrap()
            })
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_suite");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 100), |b| {
            b.iter(|| oracle_suite(black_box(7), 100, exec).unwrap())
        });
    }
    group.finish();
}

fn betas(c: &mut Criterion) {
    let market = generate(&SynthConfig {
        n_assets: 400,
        n_months: 240,
        ..SynthConfig::default()
    })
    .unwrap();
    let prepared = prepare(
        &market.panel,
        Some(&market.factors),
        &PipelineConfig::default(),
    )
    .unwrap();
    let mut group = c.benchmark_group("benchmark_residual_betas");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, prepared.panel.n_assets()), |b| {
            b.iter(|| {
                benchmark_residual_betas_with(
                    &prepared.panel,
                    &prepared.market_returns,
                    &prepared.benchmark_returns,
                    &prepared.risk_free,
                    exec,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, frontier_sweep, oracle, betas);
criterion_main!(benches);
