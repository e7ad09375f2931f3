use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nullclust_bench::fixture;
use nullclust_core::datagen::Dataset;
use nullclust_core::kmeans::{kmeans_fit, DEFAULT_MAX_ITER, DEFAULT_TOL};
use nullclust_core::linalg::{covariance, sym_eigen};
use nullclust_core::metrics::silhouette;
use nullclust_core::skmeans;
use nullclust_core::{Distance, RngStream};

fn fits(c: &mut Criterion) {
    let z = fixture(Dataset::Cytometer, 2000);
    let stream = RngStream::new(1, 0);
    let mut group = c.benchmark_group("fit");
    group.sample_size(20);
    for k in [2, 5, 10] {
        group.bench_with_input(BenchmarkId::new("classical", k), &k, |b, &k| {
            b.iter(|| {
                kmeans_fit(black_box(&z), k, 10, DEFAULT_MAX_ITER, DEFAULT_TOL, &stream).unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("spherical", k), &k, |b, &k| {
            b.iter(|| {
                skmeans::skmeans_fit(
                    black_box(&z),
                    k,
                    10,
                    DEFAULT_MAX_ITER,
                    skmeans::DEFAULT_TOL,
                    &stream,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn silhouettes(c: &mut Criterion) {
    let mut group = c.benchmark_group("silhouette");
    group.sample_size(10);
    for n in [500, 2000] {
        let z = fixture(Dataset::Multimodal, n);
        let fit = kmeans_fit(
            &z,
            5,
            1,
            DEFAULT_MAX_ITER,
            DEFAULT_TOL,
            &RngStream::new(2, 0),
        )
        .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| silhouette(black_box(&z), &fit.partition, Distance::Euclidean).unwrap())
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let z = fixture(Dataset::Correlated, 2000);
    let cov = covariance(&z.centered(&z.column_means())).unwrap();
    c.bench_function("sym_eigen_6x6", |b| {
        b.iter(|| sym_eigen(black_box(&cov)).unwrap())
    });
}

criterion_group!(benches, fits, silhouettes, eigen);
criterion_main!(benches);
