//! Parallel suites against the same work pinned to one thread.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use fraisse_core::families::{amalgamation_suite, FamilyName, FamilySpec};
use fraisse_core::limits::{build_sequence, BuildOptions};
use fraisse_core::par;
use fraisse_core::suites::{factorization, pullback_propagation};

fn compare(c: &mut Criterion, name: &str, work: impl Fn() -> usize + Sync + Send + Copy) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    group.bench_function("parallel", |b| b.iter(|| black_box(work())));
    group.bench_function("sequential", |b| b.iter(|| black_box(par::sequential(work))));
    group.finish();
}

fn suites(c: &mut Criterion) {
    compare(c, "pullback_propagation_cap4", || {
        pullback_propagation(4).unwrap().instances
    });
    compare(c, "factorization_cap6", || factorization(6).unwrap().instances);
    compare(c, "tm_amalgamation_cap4", || {
        amalgamation_suite(&FamilySpec::get(FamilyName::TM), 4)
            .unwrap()
            .instances
    });
    compare(c, "tce_sequence_depth4", || {
        build_sequence(&FamilySpec::get(FamilyName::TCE), &BuildOptions::new(4, 3))
            .unwrap()
            .stage_count()
    });
}

criterion_group!(benches, suites);
criterion_main!(benches);
