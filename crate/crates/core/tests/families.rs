use fraisse_core::canon::enumerate_trees_up_to;
use fraisse_core::families::{
    amalgamation_suite, attach_leaf, attach_triod, double_tree, hypothesis_no_isolated_ends, hypothesis_transitive,
    is_tm3, split_ramification, stretch_leaf, subdivide_edge, FamilyName, FamilySpec, Move,
};
use fraisse_core::rooted::RootOrder;
use fraisse_core::{Constraints, Error, Graph, GraphMap, Property};

/// Every application of the family's surgery moves to `t`.
fn move_maps(spec: &FamilySpec, t: &Graph) -> Vec<GraphMap> {
    let root = spec.rooted.then_some(0);
    let mut out = Vec::new();
    for mv in &spec.surgery_moves {
        match mv {
            Move::SubdivideEdge => {
                for &(u, v) in t.edges() {
                    out.push(subdivide_edge(t, u, v, root).unwrap().1);
                    out.push(subdivide_edge(t, v, u, root).unwrap().1);
                }
            }
            Move::AttachLeaf => out.extend(t.vertices().map(|v| attach_leaf(t, v, root).unwrap().1)),
            Move::AttachTriod => out.extend(t.vertices().map(|v| attach_triod(t, v, root).unwrap().1)),
            Move::SplitRamification => out.push(split_ramification(t).unwrap().1),
            Move::DoubleTree => out.push(double_tree(t, 0).unwrap().1),
            Move::StretchLeaf => {
                let order = RootOrder::new(t, 0).unwrap();
                for e in order.maximal().iter().filter(|&e| e != 0) {
                    let a = order.parent(e).unwrap();
                    out.push(stretch_leaf(t, 0, a, e).unwrap().1);
                }
            }
        }
    }
    out
}

#[test]
fn surgery_moves_stay_in_the_family() {
    for name in FamilyName::ALL {
        let spec = FamilySpec::get(name);
        let mut applied = 0;
        for t in spec.trees_up_to(6) {
            for m in move_maps(&spec, &t) {
                assert!(spec.map_in_family(&m), "{name}: {m:?}");
                applied += 1;
            }
        }
        assert!(applied > 0, "{name}");
    }
}

#[test]
fn split_ramification_normalizes_into_tm3() {
    for t in enumerate_trees_up_to(8) {
        let (h, m) = split_ramification(&t).unwrap();
        assert!(is_tm3(&h), "{t:?}");
        assert!(m.satisfies(&Constraints::monotone()));
        if is_tm3(&t) {
            assert_eq!(h, t);
            assert_eq!(m.assign(), (0..t.n()).collect::<Vec<_>>());
        }
        let (again, id) = split_ramification(&h).unwrap();
        assert_eq!(again, h);
        assert_eq!(id.assign(), (0..h.n()).collect::<Vec<_>>());
    }
}

#[test]
fn split_ramification_rejects_cycles() {
    let cycle = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    assert!(matches!(split_ramification(&cycle), Err(Error::NotATree)));
}

#[test]
fn amalgamation_suites_pass_at_cap_4() {
    for name in FamilyName::ALL {
        let r = amalgamation_suite(&FamilySpec::get(name), 4).unwrap();
        assert!(r.instances > 0, "{name}");
        assert!(r.passed, "{name}: {:?}", r.counterexamples);
    }
}

#[test]
fn hypothesis_suites_pass_where_defined() {
    for name in [FamilyName::TM, FamilyName::TC, FamilyName::TCE, FamilyName::TE] {
        let spec = FamilySpec::get(name);
        for r in [
            hypothesis_transitive(&spec, 6).unwrap(),
            hypothesis_no_isolated_ends(&spec, 6).unwrap(),
        ] {
            assert!(r.passed, "{name} {}: {:?}", r.suite, r.counterexamples);
            assert!(r.instances > 10);
        }
    }
    for name in [FamilyName::TM3, FamilyName::FE] {
        let spec = FamilySpec::get(name);
        assert!(matches!(hypothesis_transitive(&spec, 4), Err(Error::Precondition(_))));
    }
}

#[test]
fn family_amalgamations_commute_and_stay_in_the_family() {
    for name in [FamilyName::TM3, FamilyName::FE] {
        let spec = FamilySpec::get(name);
        let trees: Vec<_> = spec.trees_up_to(5).into_iter().map(std::sync::Arc::new).collect();
        for a in trees.iter().filter(|a| a.n() >= 2) {
            for b in &trees {
                for f in spec.maps(b, a).unwrap() {
                    let r = spec.amalgamate(&f, &f).unwrap();
                    assert!(spec.accepts(&r) && r.certificate.commutes, "{name}: {f:?}");
                    assert!(r.f0.holds(Property::Epimorphism).unwrap());
                }
            }
        }
    }
}
