//! Sequential vs rayon execution for the two batch workloads: one grid
//! search and a full pairwise experiment matrix.
//!
//! Without the `parallel` feature both arms run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use datl::data::Standardizer;
use datl::exec::Execution;
use datl::fraction::Fraction;
use datl::regress::{grid_search, Method, RegressorSpec};
use datl::synthetic::shifted_corpus;
use datl::transfer::{pairwise_matrix, MixingPolicy};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench_grid_search(c: &mut Criterion) {
    let corpus = shifted_corpus(1);
    let train = corpus[0].dataset.concat(&corpus[1].dataset);
    let scaler = Standardizer::fit(&train).expect("non-empty");
    let train = scaler.apply(&train);
    let validation = scaler.apply(&corpus[2].dataset);

    let mut group = c.benchmark_group("grid_search");
    group.sample_size(10);
    for method in [Method::Elm, Method::Svr] {
        let spec = RegressorSpec::new(method);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(method.name(), name), &exec, |b, &exec| {
                b.iter(|| {
                    grid_search(black_box(&spec), &train, &validation, exec).expect("grid search")
                })
            });
        }
    }
    group.finish();
}

fn bench_matrix(c: &mut Criterion) {
    let corpus = shifted_corpus(1);
    let specs = RegressorSpec::standard_trio();
    let f = Fraction::new(1, 3).expect("1/3");

    let mut group = c.benchmark_group("pairwise_matrix");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                pairwise_matrix(
                    black_box(&corpus),
                    &specs,
                    f,
                    MixingPolicy::EarliestYears,
                    7,
                    exec,
                )
                .expect("matrix")
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_grid_search, bench_matrix);
criterion_main!(benches);
