use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use imres_bench::{block_fixture, example_one, linear_system};
use imres_core::block;
use imres_core::network::{batch_loss_and_grad, LossKind};
use imres_core::numkit::lu_solve;

fn bench_lu(c: &mut Criterion) {
    let mut group = c.benchmark_group("lu_solve");
    for n in [5, 10, 50] {
        let (a, b) = linear_system(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| lu_solve(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn bench_block(c: &mut Criterion) {
    let mut group = c.benchmark_group("block");
    for n in [5, 6, 10] {
        let (cfg, params, x) = block_fixture(n, 2);
        group.bench_with_input(BenchmarkId::new("forward", n), &n, |bench, _| {
            bench.iter(|| block::forward(&cfg, &params, black_box(&x)).unwrap())
        });
        let (y, tape) = block::forward(&cfg, &params, &x).unwrap();
        group.bench_with_input(BenchmarkId::new("backward", n), &n, |bench, _| {
            bench.iter(|| block::backward(&cfg, &params, &tape, black_box(&x)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("reconstruct", n), &n, |bench, _| {
            bench.iter(|| block::reconstruct_input(&cfg, &params, black_box(&y)).unwrap())
        });
    }
    group.finish();
}

fn bench_training_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_gradient");
    for (theta, reversible) in [(0.0, false), (0.5, false), (0.5, true)] {
        let (model, train) = example_one(10, theta);
        let batch: Vec<_> = train.iter().take(4).collect();
        let id = format!("theta={theta},reversible={reversible}");
        group.bench_function(id, |bench| {
            bench.iter(|| batch_loss_and_grad(&model, black_box(&batch), LossKind::SquaredError, reversible).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_lu, bench_block, bench_training_step);
criterion_main!(benches);
