//! Parallel vs sequential execution of the main data-parallel kernels.
//!
//! Build with `--no-default-features` to see the fallback path: both
//! variants then run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geoclique::generators::generate;
use geoclique::lemmacheck::{check_lemma, LemmaId, SuiteConfig};
use geoclique::octahedron::{cheap_tau_upper, greedy_tau_lower};
use geoclique::{count_maximal, Execution, PlaneModel, SampleSpec};

const MODES: [(&str, Execution); 2] = [
    ("parallel", Execution::Parallel),
    ("sequential", Execution::Sequential),
];

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    for (label, model) in [
        ("euclid-20k", PlaneModel::euclidean(20_000, 0.02).unwrap()),
        (
            "hyperbolic-20k",
            PlaneModel::hyperbolic(20_000, 2.5, 0.0).unwrap(),
        ),
    ] {
        let spec = SampleSpec::new(model, 1);
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(label, mode), &exec, |b, &exec| {
                b.iter(|| generate(&spec, exec))
            });
        }
    }
    group.finish();
}

fn cliques(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_maximal");
    group.sample_size(10);
    for (label, model) in [
        ("euclid-800", PlaneModel::euclidean(800, 0.4).unwrap()),
        (
            "hyperbolic-3200",
            PlaneModel::hyperbolic(3200, 2.2, 0.0).unwrap(),
        ),
    ] {
        let g = generate(&SampleSpec::new(model, 1), Execution::Parallel).graph;
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(label, mode), &exec, |b, &exec| {
                b.iter(|| count_maximal(&g, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn tau(c: &mut Criterion) {
    let mut group = c.benchmark_group("tau");
    group.sample_size(10);
    let g = generate(
        &SampleSpec::new(PlaneModel::euclidean(2000, 0.1).unwrap(), 1),
        Execution::Parallel,
    )
    .graph;
    for (mode, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("cheap-upper", mode), &exec, |b, &exec| {
            b.iter(|| cheap_tau_upper(&g, exec))
        });
        group.bench_with_input(BenchmarkId::new("greedy-lower", mode), &exec, |b, &exec| {
            b.iter(|| greedy_tau_lower(&g, 8, 0, exec))
        });
    }
    group.finish();
}

fn lemmas(c: &mut Criterion) {
    let mut group = c.benchmark_group("lemma");
    group.sample_size(10);
    let model = PlaneModel::hyperbolic(10_000, 2.5, 0.0).unwrap();
    let cfg = SuiteConfig {
        target: 2_000,
        ..SuiteConfig::default()
    };
    for (mode, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("hyp-split", mode), &exec, |b, &exec| {
            b.iter(|| check_lemma(LemmaId::HypSplit, &model, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sampling, cliques, tau, lemmas);
criterion_main!(benches);
