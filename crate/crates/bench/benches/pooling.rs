use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pyramidcast_core::models::moving_average;
use pyramidcast_core::numeric::avg_pool_1d;
use pyramidcast_core::{build_pyramid, DenseArray, PoolConfig, PyramidConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn series(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn pooling(c: &mut Criterion) {
    let mut group = c.benchmark_group("avg_pool_1d");
    for n in [336, 720, 4096] {
        let x = series(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| avg_pool_1d(black_box(x), PoolConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn pyramid(c: &mut Criterion) {
    let x = DenseArray::new(vec![336, 7], series(336 * 7)).unwrap();
    c.bench_function("build_pyramid_336x7", |b| {
        b.iter(|| build_pyramid(black_box(&x), &PyramidConfig::default()).unwrap())
    });
}

fn moving_avg(c: &mut Criterion) {
    let x = series(336);
    c.bench_function("moving_average_k25_336", |b| {
        b.iter(|| moving_average(black_box(&x), 25).unwrap())
    });
}

criterion_group!(benches, pooling, pyramid, moving_avg);
criterion_main!(benches);
