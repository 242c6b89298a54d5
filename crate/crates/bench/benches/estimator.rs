use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vfrecon::neighbors::{brute_force_knn, KnnIndex};
use vfrecon::{build_model, calibrate, NormMode, SearchStrategy};
use vfrecon_bench::{dataset, queries, random_points};

fn knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("knn");
    for dim in [2usize, 6, 18] {
        let points = random_points(20_000, dim, 1);
        let query = random_points(1, dim, 2);
        let tree = KnnIndex::with_strategy(points.clone(), dim, SearchStrategy::Tree).unwrap();
        group.bench_with_input(BenchmarkId::new("tree", dim), &dim, |b, _| {
            b.iter(|| tree.knn(black_box(&query), 10).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("brute-force", dim), &dim, |b, &dim| {
            b.iter(|| brute_force_knn(black_box(&query), &points, dim, 10).unwrap())
        });
    }
    group.finish();
}

fn build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_model");
    group.sample_size(10);
    for dim in [2usize, 6, 18] {
        let ds = dataset(dim, 50, 100);
        let params = calibrate(50, 100, 1.0, NormMode::Pointwise).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| build_model(black_box(&ds), &params).unwrap())
        });
    }
    group.finish();
}

fn query(c: &mut Criterion) {
    let mut group = c.benchmark_group("query_batch_1000");
    group.sample_size(10);
    for dim in [2usize, 6, 18] {
        let ds = dataset(dim, 200, 200);
        let params = calibrate(200, 200, 1.0, NormMode::Pointwise).unwrap();
        let model = build_model(&ds, &params).unwrap();
        let xs = queries(dim, 1000);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| model.query_batch(black_box(&xs)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, knn, build, query);
criterion_main!(benches);
