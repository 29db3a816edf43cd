//! Microbenchmarks for the regularizer family.
//!
//! The interesting comparisons are ratios: sparseout forward vs dropout
//! forward (the powf overhead), backward cost, and the per-example mask
//! regeneration that makes bridgeout expensive by design.
//!
//! Run with `cargo bench -p sparseout-bench`. Sample counts are kept small
//! because each iteration is already substantial arithmetic.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sparseout::{
    bridgeout_forward, dropout_forward, sparseout_backward, sparseout_forward, Mode, RegConfig,
    RegKind, RegLayer, Rng,
};
use sparseout_bench::{activation_batch, primed_layer};

const BATCH: usize = 128;
const WIDTH: usize = 512;

fn bench_forward(c: &mut Criterion) {
    let a = activation_batch(BATCH, WIDTH, 11);
    let mut group = c.benchmark_group("forward");
    group
        .sample_size(20)
        .measurement_time(Duration::from_secs(3));

    group.bench_function(BenchmarkId::new("dropout", "p0.5"), |b| {
        let mut rng = Rng::new(21);
        b.iter(|| dropout_forward(std::hint::black_box(&a), 0.5, Mode::Train, &mut rng).unwrap())
    });

    for q in [1.5, 2.0, 2.5] {
        group.bench_function(BenchmarkId::new("sparseout", format!("q{q}")), |b| {
            let mut layer =
                RegLayer::new(RegKind::Sparseout, RegConfig::new(0.5, q).unwrap()).unwrap();
            let mut rng = Rng::new(22);
            b.iter(|| {
                sparseout_forward(&mut layer, std::hint::black_box(&a), Mode::Train, &mut rng)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_backward(c: &mut Criterion) {
    let a = activation_batch(BATCH, WIDTH, 31);
    let upstream = activation_batch(BATCH, WIDTH, 32);
    let mut group = c.benchmark_group("backward");
    group
        .sample_size(20)
        .measurement_time(Duration::from_secs(3));

    for q in [1.5, 2.0, 2.5] {
        let layer = primed_layer(&a, q, 33);
        group.bench_function(BenchmarkId::new("sparseout", format!("q{q}")), |b| {
            b.iter(|| sparseout_backward(std::hint::black_box(&upstream), &layer).unwrap())
        });
    }

    let dropout = primed_layer(&a, 2.0, 33);
    group.bench_function(BenchmarkId::new("dropout", "p0.5"), |b| {
        b.iter(|| dropout.backward(std::hint::black_box(&upstream)).unwrap())
    });
    group.finish();
}

/// Bridgeout redraws a mask over the whole weight matrix for every single
/// example; the comparison point is one plain affine map of the same batch.
fn bench_bridgeout(c: &mut Criterion) {
    let out_dim = 128;
    let in_dim = 256;
    let batch = 32;
    let w = Rng::new(41).uniform_tensor(out_dim, in_dim, -0.1, 0.1);
    let x = activation_batch(batch, in_dim, 42);
    let cfg = RegConfig::new(0.5, 1.5).unwrap();

    let mut group = c.benchmark_group("bridgeout");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(5));

    group.bench_function("per_example_masks", |b| {
        let mut rng = Rng::new(43);
        b.iter(|| bridgeout_forward(&w, std::hint::black_box(&x), &cfg, &mut rng).unwrap())
    });

    group.bench_function("plain_affine_baseline", |b| {
        let wt = w.transpose();
        b.iter(|| std::hint::black_box(&x).matmul(&wt).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_forward, bench_backward, bench_bridgeout);
criterion_main!(benches);
