use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use smoothnet::analyzer::{self, Thresholds};
use smoothnet::par::Exec;
use smoothnet::trainer::{self, Dataset, TrainConfig};

fn training(c: &mut Criterion) {
    let data = Dataset::from_grid(&|x| 16.0 * (x[0].powi(3) + x[1].powi(3)) + 3.0, 2, 0.02).unwrap();
    let mut g = c.benchmark_group("train_2d_50_steps");
    for exec in [Exec::Sequential, Exec::Parallel] {
        let cfg = TrainConfig { theta: 20, lr: 0.01, steps: 50, exec, ..Default::default() };
        let net = trainer::init_net(&cfg, 2);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| trainer::train(&net, &data, cfg).unwrap())
        });
    }
    g.finish();
}

fn analysis(c: &mut Criterion) {
    let data = Dataset::from_grid(&|x| (20.0 * x[0]).sin(), 1, 0.001).unwrap();
    let cfg = TrainConfig { theta: 20, ..Default::default() };
    let net = trainer::init_net(&cfg, 1);
    let th = Thresholds::default();
    let mut g = c.benchmark_group("analyze_1d_20_units");
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_function(format!("{exec:?}"), |b| b.iter(|| analyzer::analyze_with(exec, &net, &data, &th).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, training, analysis);
criterion_main!(benches);
