//! Criterion benchmarks for the hot paths: pooling, SLDA updates and
//! prediction, and the toy backbone forward pass.

use criterion::{criterion_group, criterion_main, Criterion};
use oclbench_core::learners::{Learner, Slda};
use oclbench_core::pooling::{pool, PoolingSpec};
use oclbench_core::synth::{default_class_specs, gen_image_dataset, ToyBackbone};
use oclbench_core::tensor::FeatureMap;
use oclbench_core::RngStream;
use std::hint::black_box;

fn random_map(seed: u64, h: usize, w: usize, d: usize) -> FeatureMap {
    let mut rng = RngStream::new(seed, "bench/map");
    let data = (0..h * w * d).map(|_| rng.gaussian() as f32).collect();
    FeatureMap::new(h, w, d, data).unwrap()
}

fn bench_pooling(c: &mut Criterion) {
    let g = random_map(1, 8, 8, 64);
    let mut group = c.benchmark_group("pooling");
    for (name, spec) in [
        ("avg", PoolingSpec::Avg),
        ("moments_r3", PoolingSpec::moments(3)),
        ("rap_50", PoolingSpec::Rap { k_percent: 0.5 }),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| pool(black_box(&g), &spec, None).unwrap())
        });
    }
    group.finish();
}

fn bench_slda(c: &mut Criterion) {
    let dim = 192;
    let mut rng = RngStream::new(2, "bench/slda");
    let samples: Vec<(u32, Vec<f64>)> = (0..64)
        .map(|i| (i % 5, (0..dim).map(|_| rng.gaussian()).collect()))
        .collect();
    c.bench_function("slda_observe_64", |b| {
        b.iter(|| {
            let mut slda = Slda::new(dim, 1e-4);
            for (y, z) in &samples {
                slda.observe(black_box(z), *y).unwrap();
            }
            slda
        })
    });
    let mut slda = Slda::new(dim, 1e-4);
    for (y, z) in &samples {
        slda.observe(z, *y).unwrap();
    }
    let query: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
    slda.predict(&query).unwrap(); // warm the weight cache
    c.bench_function("slda_predict", |b| {
        b.iter(|| slda.predict(black_box(&query)).unwrap())
    });
}

fn bench_backbone(c: &mut Criterion) {
    let ds = gen_image_dataset(&default_class_specs()[..2], 1, 0, 32, 3).unwrap();
    let img = &ds.train[0].1[0];
    let bb = ToyBackbone::new(1);
    c.bench_function("backbone_forward_32", |b| {
        b.iter(|| bb.forward(black_box(img)).unwrap())
    });
}

criterion_group!(benches, bench_pooling, bench_slda, bench_backbone);
criterion_main!(benches);
