use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use emotion_bench::fixture;
use emotion_core::sparse_features::{fit_tfidf, transform_tfidf};
use emotion_core::{fit, fit_pca, predict, ClassifierSpec, ReductionConfig};

fn features(c: &mut Criterion) {
    let f = fixture(400);
    c.bench_function("tfidf_fit", |b| b.iter(|| fit_tfidf(black_box(&f.train_tokens)).unwrap()));
    let model = fit_tfidf(&f.train_tokens).unwrap();
    c.bench_function("tfidf_transform", |b| b.iter(|| transform_tfidf(black_box(&f.test_tokens), &model)));
    c.bench_function("pca_fit", |b| {
        b.iter(|| fit_pca(black_box(&f.train_tfidf), &ReductionConfig::default()).unwrap())
    });
}

fn classifiers(c: &mut Criterion) {
    let f = fixture(400);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for spec in [
        ClassifierSpec::dt(),
        ClassifierSpec::knn(5),
        ClassifierSpec::rf(),
        ClassifierSpec::svm(),
        ClassifierSpec::mlp(),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(spec.kind_name()), &spec, |b, spec| {
            b.iter(|| fit(spec, &f.train_reduced, &f.train_labels).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("predict");
    for spec in [ClassifierSpec::dt(), ClassifierSpec::knn(5), ClassifierSpec::rf()] {
        let model = fit(&spec, &f.train_reduced, &f.train_labels).unwrap();
        group.bench_function(spec.kind_name(), |b| b.iter(|| predict(&model, black_box(&f.test_reduced)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, features, classifiers);
criterion_main!(benches);
