use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use flock_core::model::{fedavg, ParamVector};
use flock_core::protocol::{tally, ProtocolParams, Vote};
use flock_core::sim::{run_single, SimConfig};
use flock_core::task::{generate_client_data, honest_train, DatasetRole, TaskSpec};
use flock_core::NodeId;

fn bench_fedavg(c: &mut Criterion) {
    let updates: Vec<ParamVector> = (0..10)
        .map(|i| ParamVector::from_raw((0..16).map(|j| (i * 7919 + j * 104729) as i64).collect()))
        .collect();
    c.bench_function("fedavg_10x16", |b| b.iter(|| fedavg(black_box(&updates)).unwrap()));
}

fn bench_train(c: &mut Criterion) {
    let task = TaskSpec::with_random_weights(16, 0.1, 256, 128, 0.0005, 10, 1);
    let data = generate_client_data(&task, 2, DatasetRole::Train);
    let global = ParamVector::zeros(16);
    c.bench_function("honest_train_256x16_10_steps", |b| {
        b.iter(|| honest_train(black_box(&global), &data, &task).unwrap())
    });
}

fn bench_tally(c: &mut Criterion) {
    let params = ProtocolParams::default();
    let votes: Vec<Vote> = (0..20).map(|i| Vote::new(NodeId(i), Some((i as f64 - 9.5) / 10.0))).collect();
    c.bench_function("tally_20", |b| b.iter(|| tally(black_box(&votes), &params)));
}

fn bench_run(c: &mut Criterion) {
    let config = SimConfig { rounds: 20, ..SimConfig::default() };
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    group.bench_function("run_100_nodes_20_rounds", |b| {
        b.iter_batched(|| config.clone(), |cfg| run_single(&cfg, 0).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, bench_fedavg, bench_train, bench_tally, bench_run);
criterion_main!(benches);
