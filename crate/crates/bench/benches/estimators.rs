use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use popsight_bench::{collection_dataset, image_dataset, random_matrix, world_config};
use popsight_core::evaluation::cross_validate;
use popsight_core::jolly_seber::{jolly_seber_estimate, occasion_statistics};
use popsight_core::models::fit;
use popsight_core::synth::generate;
use popsight_core::{CvPlan, JsVariant, LearnerKind, LearnerSpec, Metric};

fn jolly_seber(c: &mut Criterion) {
    let matrix = random_matrix(7, 5000, 12, 0.3);
    c.bench_function("occasion_statistics 5000x12", |b| {
        b.iter(|| occasion_statistics(black_box(&matrix)).unwrap())
    });
    let stats = occasion_statistics(&matrix).unwrap();
    c.bench_function("jolly_seber_estimate 12 occasions", |b| {
        b.iter(|| jolly_seber_estimate(black_box(&stats), JsVariant::Classic))
    });
}

fn learners(c: &mut Criterion) {
    let images = image_dataset(3);
    let collections = collection_dataset(4);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for kind in [
        LearnerKind::DecisionTree,
        LearnerKind::RandomForest,
        LearnerKind::GbtClassifier,
        LearnerKind::LogisticRegression,
    ] {
        let spec = LearnerSpec::new(kind).with_seed(1);
        group.bench_function(format!("{kind:?} images"), |b| {
            b.iter(|| fit(&spec, black_box(&images)).unwrap())
        });
    }
    let gbt = LearnerSpec::new(LearnerKind::GbtRegressor).with_seed(1);
    group.bench_function("GbtRegressor collections", |b| {
        b.iter(|| fit(&gbt, black_box(&collections)).unwrap())
    });
    group.finish();

    let mut cv = c.benchmark_group("cross_validate");
    cv.sample_size(10);
    let plan = CvPlan {
        n_folds: 10,
        n_repeats: 2,
        stratified: false,
        seed: 5,
    };
    let elastic = LearnerSpec::new(LearnerKind::ElasticNet);
    cv.bench_function("elastic_net 10x2", |b| {
        b.iter(|| cross_validate(&elastic, &collections, &plan, &Metric::regression()).unwrap())
    });
    cv.finish();
}

fn simulator(c: &mut Criterion) {
    let mut group = c.benchmark_group("synth");
    group.sample_size(10);
    group.bench_function("generate 5 occasions x 20 photographers", |b| {
        b.iter_batched(|| world_config(9, 20), |cfg| generate(&cfg).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, jolly_seber, learners, simulator);
criterion_main!(benches);
