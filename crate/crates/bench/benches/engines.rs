//! Benchmarks: basic vs doubling engines, seed sensitivity, window-matcher
//! cost analysis and the clump machinery on representative instances.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use paa_core::algocost::{cost_distribution, horspool_spec, sunday_spec};
use paa_core::daa::{CountScheme, PatternSpec};
use paa_core::patstats::{clump_size_distribution, occurrence_distribution, PatternAutomaton};
use paa_core::seedstat::{homology_model, seed_sensitivity, HomologyModel, MultipleSeed, Seed};
use paa_core::textmodel::uniform_model;
use paa_core::Method;

fn bench_engines(c: &mut Criterion) {
    let model = uniform_model(&['0', '1']).unwrap();
    let pattern = PatternSpec::Strings(vec!["101".into(), "111".into()]);
    let automaton = PatternAutomaton::new(&pattern, &model, 5, CountScheme::Overlapping).unwrap();
    let paa = automaton.composed.paa;
    let mut group = c.benchmark_group("state_value_distribution");
    for n in [64usize, 512] {
        group.bench_function(format!("basic/n{n}"), |b| {
            b.iter(|| {
                paa.state_value_distribution(black_box(n), Method::Basic)
                    .unwrap()
            })
        });
        group.bench_function(format!("doubling/n{n}"), |b| {
            b.iter(|| {
                paa.state_value_distribution(black_box(n), Method::Doubling)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_seed_sensitivity(c: &mut Criterion) {
    let seeds = MultipleSeed::new(vec![Seed::parse("111*1**1*1**11*111").unwrap()]).unwrap();
    let model = homology_model(HomologyModel::Ungapped { p: 0.95 }).unwrap();
    c.bench_function("seed_sensitivity/ph_n64", |b| {
        b.iter(|| seed_sensitivity(black_box(&seeds), &model, 64).unwrap())
    });
}

fn bench_occurrence(c: &mut Criterion) {
    let model = uniform_model(&['0', '1']).unwrap();
    let pattern = PatternSpec::Strings(vec!["101".into(), "111".into()]);
    c.bench_function("occurrence/n1000_m50", |b| {
        b.iter(|| {
            occurrence_distribution(
                black_box(&pattern),
                &model,
                1000,
                50,
                CountScheme::Overlapping,
                Method::Basic,
            )
            .unwrap()
        })
    });
}

fn bench_matcher_cost(c: &mut Criterion) {
    let dna = uniform_model(&['A', 'C', 'G', 'T']).unwrap();
    let horspool = horspool_spec("ACAGC").unwrap();
    let sunday = sunday_spec("ACAGC").unwrap();
    let mut group = c.benchmark_group("matcher_cost");
    group.sample_size(10);
    group.bench_function("horspool/acagc_n20", |b| {
        b.iter(|| cost_distribution(black_box(&horspool), &dna, 20).unwrap())
    });
    group.bench_function("sunday/acagc_n20", |b| {
        b.iter(|| cost_distribution(black_box(&sunday), &dna, 20).unwrap())
    });
    group.finish();
}

fn bench_clumps(c: &mut Criterion) {
    let model = uniform_model(&['0', '1']).unwrap();
    let pattern = PatternSpec::Strings(vec!["11".into()]);
    c.bench_function("clump_size/11_m20", |b| {
        b.iter(|| clump_size_distribution(black_box(&pattern), &model, 20, 1e-9).unwrap())
    });
}

criterion_group!(
    benches,
    bench_engines,
    bench_seed_sensitivity,
    bench_occurrence,
    bench_matcher_cost,
    bench_clumps
);
criterion_main!(benches);
