use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wxdrive_core::harness::batch::{cells, run_cells};
use wxdrive_core::harness::{rescore_records, BatchSpec, RescoreContext, RunConfig};
use wxdrive_core::parallel::{par_map, seq_map};

fn grid() -> BatchSpec {
    let mut base = RunConfig::default();
    base.scenario.traffic.n_vehicles = 24;
    BatchSpec {
        seeds: vec![1, 2],
        base,
        ..BatchSpec::default()
    }
}

fn batch_grid(c: &mut Criterion) {
    let spec = grid();
    let cells = cells(&spec).expect("valid grid");
    let mut group = c.benchmark_group("batch_grid_40_cells");
    group.sample_size(20);
    group.bench_function("sequential", |b| b.iter(|| black_box(run_cells(&cells, &spec.base, false))));
    group.bench_function("parallel", |b| b.iter(|| black_box(run_cells(&cells, &spec.base, true))));
    group.finish();
}

fn rescore_many(c: &mut Criterion) {
    let spec = grid();
    let cells = cells(&spec).expect("valid grid");
    let logs: Vec<_> = run_cells(&cells, &spec.base, true)
        .into_iter()
        .map(|r| r.expect("cell runs").records)
        .collect();
    let ctx = RescoreContext::from_config(&spec.base);
    let job = |log: &Vec<_>| rescore_records(log, &ctx).expect("scores");
    let mut group = c.benchmark_group("rescore_40_logs");
    group.bench_function("sequential", |b| b.iter(|| black_box(seq_map(&logs, job))));
    group.bench_function("parallel", |b| b.iter(|| black_box(par_map(&logs, job))));
    group.finish();
}

criterion_group!(benches, batch_grid, rescore_many);
criterion_main!(benches);
