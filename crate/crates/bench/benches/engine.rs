use std::hint::black_box;

use alforge_core::coldstart::{elbow_select, kmeans_best_of};
use alforge_core::metrics::snapshot;
use alforge_core::models::{build_committee, train_knn};
use alforge_core::strategies::{select_qbc, select_us, UsMeasure};
use alforge_core::synthetic::{gaussian_blobs, grid_centers};
use alforge_core::Dataset;
use criterion::{criterion_group, criterion_main, Criterion};

/// Four blobs of 200 with every fourth point labeled by its true class.
fn labeled_blobs() -> Dataset {
    let mut ds = gaussian_blobs(&grid_centers(4, 10.0), 200, 1.5, 7).unwrap();
    let truth = ds.ground_truth().unwrap().to_vec();
    for id in (0..ds.len()).step_by(4) {
        ds.mark_labeled(id, truth[id]).unwrap();
    }
    ds
}

fn models(c: &mut Criterion) {
    let ds = labeled_blobs();
    let model = train_knn(&ds, 9).unwrap();
    c.bench_function("knn predict 600 points", |b| {
        b.iter(|| {
            for id in ds.unlabeled() {
                black_box(model.predict_proba(ds.features(*id)).unwrap());
            }
        })
    });
    c.bench_function("committee build 10 members", |b| {
        b.iter(|| black_box(build_committee(&ds, 10, 9, 3).unwrap()))
    });
}

fn coldstart(c: &mut Criterion) {
    let ds = gaussian_blobs(&grid_centers(4, 10.0), 200, 1.5, 7).unwrap().cleared();
    c.bench_function("kmeans k=4 best of 5", |b| {
        b.iter(|| black_box(kmeans_best_of(&ds, 4, 11, 5).unwrap()))
    });
    let mut group = c.benchmark_group("elbow");
    group.sample_size(10);
    group.bench_function("elbow k_max=10", |b| b.iter(|| black_box(elbow_select(&ds, 10, 11).unwrap())));
    group.finish();
}

fn querying(c: &mut Criterion) {
    let ds = labeled_blobs();
    let model = train_knn(&ds, 9).unwrap();
    let committee = build_committee(&ds, 10, 9, 3).unwrap();
    c.bench_function("select us entropy", |b| {
        b.iter(|| black_box(select_us(&model, &ds, UsMeasure::Entropy).unwrap()))
    });
    c.bench_function("select qbc", |b| b.iter(|| black_box(select_qbc(&committee, &ds).unwrap())));
    let mut group = c.benchmark_group("metrics");
    group.sample_size(10);
    group.bench_function("snapshot 600 pool", |b| {
        b.iter(|| black_box(snapshot(&ds, &model, &committee, 0, 3.0).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, models, coldstart, querying);
criterion_main!(benches);
