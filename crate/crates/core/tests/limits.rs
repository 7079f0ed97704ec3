use std::sync::Arc;

use fraisse_core::families::{is_tm3, separates_triple, FamilyName, FamilySpec};
use fraisse_core::limits::{
    approximant_report, build_sequence, ends_lift, thread_metric, uncovered, BuildOptions, InverseSequence, TaskKind,
    Thread,
};
use fraisse_core::{Graph, GraphMap, Property};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(name: FamilyName, depth: usize, cap: usize) -> InverseSequence {
    build_sequence(&FamilySpec::get(name), &BuildOptions::new(depth, cap)).unwrap()
}

fn maps_onto(seq: &InverseSequence, stage: usize, target: Graph) -> bool {
    let spec = seq.spec();
    let roots = spec.rooted.then_some((0, 0));
    let opts = fraisse_core::morphisms::EnumOptions {
        max_dom: usize::MAX,
        limit: Some(1),
        ..Default::default()
    };
    let top = Arc::clone(seq.stage(stage).unwrap());
    !fraisse_core::morphisms::enumerate_epis(top, Arc::new(target), &spec.constraints, roots, &opts)
        .unwrap()
        .is_empty()
}

#[test]
fn every_family_covers_its_small_trees() {
    for name in FamilyName::ALL {
        let seq = build(name, 5, 3);
        seq.validate().unwrap();
        assert_eq!(seq.stage_count(), 6, "{name}");
        let missing = uncovered(&seq, 3).unwrap();
        assert!(missing.is_empty(), "{name}: {missing:?}");
    }
}

#[test]
fn monotone_stage_three_maps_onto_small_paths() {
    let seq = build(FamilyName::TM, 3, 3);
    assert!(maps_onto(&seq, 3, Graph::path(3)));
    assert!(maps_onto(&seq, 3, Graph::path(2)));
}

#[test]
fn log_entries_commute() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in [FamilyName::TM, FamilyName::TCE, FamilyName::TE] {
        let seq = build(name, 5, 3);
        assert!(!seq.log.is_empty());
        for _ in 0..50 {
            let e = seq.log.choose(&mut rng).unwrap();
            assert!(seq.entry_commutes(e).unwrap(), "{name}: task {}", e.task);
        }
    }
}

#[test]
fn thread_metric_is_an_ultrametric() {
    let seq = build(FamilyName::TM, 5, 3);
    let last = seq.stage_count();
    let top = seq.stage(last).unwrap().n();
    let threads: Vec<Thread> = (0..top).map(|v| Thread::through(&seq, last, v).unwrap()).collect();
    let d = |a: &Thread, b: &Thread| thread_metric(&seq, a, b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let [a, b, c] = [0; 3].map(|_| &threads[rng.gen_range(0..top)]);
        assert_eq!(d(a, b), d(b, a));
        assert!(d(a, c) <= d(a, b).max(d(b, c)));
        assert_eq!(d(a, b) == 0.0, a == b);
    }
    // Every thread starts at the single vertex of stage 1.
    assert!(threads.iter().all(|t| t.verts[0] == 0));
    assert!(threads.iter().all(|t| d(t, &threads[0]) <= 0.25));
}

#[test]
fn end_preserving_stages_lift_ends() {
    let seq = build(FamilyName::TE, 5, 3);
    for n in 1..seq.stage_count() {
        assert!(ends_lift(&seq, n).unwrap(), "stage {n}");
    }
}

#[test]
fn monotone_ramification_share_does_not_drop() {
    let shares: Vec<f64> = (2..=5)
        .map(|depth| {
            let seq = build(FamilyName::TM, depth, 3);
            approximant_report(&seq, seq.stage_count()).unwrap().near_ramification
        })
        .collect();
    assert!(shares.windows(2).all(|w| w[0] <= w[1]), "{shares:?}");
}

#[test]
fn processed_separation_tasks_stay_separated() {
    let mut opts = BuildOptions::new(7, 3);
    opts.separation_tasks = true;
    let seq = build_sequence(&FamilySpec::get(FamilyName::TM), &opts).unwrap();
    seq.validate().unwrap();
    let mut checked = 0;
    for e in seq.log.iter().filter(|e| e.kind == TaskKind::Separation) {
        let base = seq.stage(e.source).unwrap();
        let n = base.n();
        let (a, b) = (e.g.apply(n), e.g.apply(n + 1));
        for &c in base.neighbors(b).iter().filter(|&&c| c != a) {
            for j in e.stage..=seq.stage_count() {
                let down: GraphMap = seq.projection(j, e.source).unwrap();
                assert!(separates_triple(&down, a, b, c), "task {} at stage {j}", e.task);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn builds_are_deterministic() {
    for name in [FamilyName::TM, FamilyName::TC] {
        assert_eq!(build(name, 4, 3), build(name, 4, 3));
    }
}

#[test]
fn depth_zero_is_the_point() {
    for name in FamilyName::ALL {
        let seq = build(name, 0, 3);
        assert_eq!(seq.stage_count(), 1);
        assert_eq!(seq.stages[0].n(), 1);
        seq.validate().unwrap();
    }
}

#[test]
fn tm3_stages_stay_in_order_three() {
    let seq = build(FamilyName::TM3, 5, 3);
    seq.validate().unwrap();
    assert!(seq.stages.iter().all(|s| is_tm3(s)));
    for n in 1..=seq.stage_count() {
        let r = approximant_report(&seq, n).unwrap();
        assert!(
            r.order_histogram.keys().all(|&k| k <= 3),
            "stage {n}: {:?}",
            r.order_histogram
        );
    }
}

#[test]
fn bonds_compose_to_projections() {
    let seq = build(FamilyName::TCE, 3, 3);
    seq.validate().unwrap();
    let last = seq.stage_count();
    for m in 1..=last {
        for n in 1..=m {
            let p = seq.projection(m, n).unwrap();
            assert!(p.holds(Property::Epimorphism).unwrap(), "{m} -> {n}");
        }
    }
}
