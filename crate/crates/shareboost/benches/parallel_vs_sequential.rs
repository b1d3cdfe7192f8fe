//! Compares the data-parallel execution path against the sequential
//! fallback on the two hottest kernels: the full gradient and the stump
//! threshold scan. With the `parallel` feature disabled both benchmarks
//! measure the same sequential code path.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shareboost::feature_map::best_stump;
use shareboost::synthetic::{code_reference_matrices, gen_code_dataset, CodeDatasetSpec};
use shareboost::{exec, model, Dataset, Regularizer};

fn bench_gradient(c: &mut Criterion) {
    let spec = CodeDatasetSpec::new(16, 20_000).unwrap();
    let data = gen_code_dataset(&spec, 0.05, 1).unwrap();
    let w = code_reference_matrices(&spec).flat;

    let mut group = c.benchmark_group("gradient");
    group.bench_function("parallel", |b| {
        b.iter(|| model::gradient(&w, &data, &Regularizer::None).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            exec::sequential_scope(|| model::gradient(&w, &data, &Regularizer::None).unwrap())
        })
    });
    group.finish();
}

fn bench_stump_scan(c: &mut Criterion) {
    let (m, p, k) = (20_000usize, 8usize, 8usize);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let features: Vec<f64> = (0..m * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
    let raw = Dataset::new(features, labels, p, k).unwrap();
    let residuals: Vec<f64> = (0..m * k).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mut group = c.benchmark_group("stump_scan");
    group.bench_function("parallel", |b| b.iter(|| best_stump(&raw, &residuals)));
    group.bench_function("sequential", |b| {
        b.iter(|| exec::sequential_scope(|| best_stump(&raw, &residuals)))
    });
    group.finish();
}

criterion_group!(benches, bench_gradient, bench_stump_scan);
criterion_main!(benches);
