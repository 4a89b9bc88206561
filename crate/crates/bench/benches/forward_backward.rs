use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pyramidcast_bench::block;
use pyramidcast_core::models::{backward, forward};
use pyramidcast_core::{init_model, loss_batch, ModelSpec, Variant};

fn forward_pass(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_L336_T96_C7_B32");
    let x = block(32, 336, 7);
    for v in Variant::ALL {
        let state = init_model(&ModelSpec::new(v, 336, 96, 7), 0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(v.name()), &state, |b, s| {
            b.iter(|| forward(s, black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn backward_pass(c: &mut Criterion) {
    let mut group = c.benchmark_group("backward_L336_T96_C7_B32");
    let x = block(32, 336, 7);
    let g = block(32, 96, 7);
    for v in [Variant::DLinear, Variant::FpnFusion] {
        let state = init_model(&ModelSpec::new(v, 336, 96, 7), 0).unwrap();
        let (_, cache) = forward(&state, &x).unwrap();
        group.bench_function(v.name(), |b| b.iter(|| backward(&state, &cache, black_box(&g)).unwrap()));
    }
    group.finish();
}

fn train_step(c: &mut Criterion) {
    let x = block(32, 336, 7);
    let y = block(32, 96, 7);
    let state = init_model(&ModelSpec::new(Variant::FpnFusion, 336, 96, 7), 0).unwrap();
    c.bench_function("loss_batch_fpn_fusion", |b| {
        b.iter(|| loss_batch(&state, black_box(&x), black_box(&y)).unwrap())
    });
}

criterion_group!(benches, forward_pass, backward_pass, train_step);
criterion_main!(benches);
