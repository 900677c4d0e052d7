use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use goalreach_bench::{closed_loop_config, dataset, network, planner};
use goalreach_core::control::{control_step, ControllerGains, SafetyZone, WheelLoopState};
use goalreach_core::planner::PlannerConfig;
use goalreach_core::simulate;

fn network_benches(c: &mut Criterion) {
    let ds = dataset();
    let full = network(&ds, &[320, 210, 105], 1);
    let refs = [0.10, 0.12, 0.30, 0.28];
    c.bench_function("nn/forward_batch_4_full", |b| {
        b.iter(|| full.forward_batch(black_box(&refs)))
    });

    let small = network(&ds, &[64, 42, 21], 1);
    let n = 2000.min(ds.len());
    let batch = small.batch(&ds.v[..n], &ds.u[..n]).unwrap();
    c.bench_function("nn/loss_grad_2000_reduced", |b| {
        b.iter(|| small.loss_grad(black_box(&batch)).unwrap())
    });
}

fn planner_benches(c: &mut Criterion) {
    let mut cfg = PlannerConfig::desk_scale();
    cfg.train.episodes = 200;
    cfg.train.eval_episodes = 1;
    let mut g = c.benchmark_group("planner");
    g.sample_size(10);
    g.bench_function("train_200_episodes", |b| b.iter(|| cfg.train().unwrap()));
    g.finish();
}

fn control_benches(c: &mut Criterion) {
    let gains = ControllerGains::default();
    let zone = SafetyZone::new((0.0, 0.0), (3.0, 4.0), 0.5).unwrap();
    let state = WheelLoopState::new(&gains);
    c.bench_function("control/step", |b| {
        b.iter(|| control_step(black_box(&state), 0.11, 0.10, 0.3, &zone, &gains, 0.05).unwrap())
    });
}

fn sim_benches(c: &mut Criterion) {
    let cfg = closed_loop_config();
    let q = planner(&cfg);
    let net = network(&dataset(), &[16, 16], 200);
    let mut g = c.benchmark_group("sim");
    g.sample_size(10);
    g.bench_function("table_iii_scenario", |b| {
        b.iter_batched(
            || cfg.clone(),
            |cfg| simulate(&cfg, &q, &net, Path::new(".")).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, network_benches, planner_benches, control_benches, sim_benches);
criterion_main!(benches);
