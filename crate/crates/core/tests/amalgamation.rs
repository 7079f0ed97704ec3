use std::sync::Arc;

use fraisse_core::amalgamation::{
    component_amalgamate, confluent_amalgamate, end_preserving_amalgamate, monotone_amalgamate, pullback,
    search_amalgamate, tree_amalgamate,
};
use fraisse_core::canon::{canonical_form, enumerate_rooted_trees_up_to, enumerate_trees_up_to};
use fraisse_core::graph::is_tree;
use fraisse_core::morphisms::{enumerate_epis, EnumOptions};
use fraisse_core::rooted::RootOrder;
use fraisse_core::{par, Constraints, Error, Graph, GraphMap, Property};

const ORDER: Constraints = Constraints {
    order: true,
    ..Constraints::NONE
};

/// All ordered pairs of maps passing `c` onto a common tree, legs up to `cap`.
fn pairs(cap: usize, c: &Constraints, rooted: bool) -> Vec<(GraphMap, GraphMap)> {
    let list = if rooted {
        enumerate_rooted_trees_up_to(cap)
    } else {
        enumerate_trees_up_to(cap)
    };
    let ts: Vec<Arc<Graph>> = list.into_iter().map(Arc::new).collect();
    let mut out = Vec::new();
    for a in &ts {
        let mut legs = Vec::new();
        for b in ts.iter().filter(|b| b.n() >= a.n()) {
            let roots = rooted.then_some((0, 0));
            legs.extend(enumerate_epis(Arc::clone(b), Arc::clone(a), c, roots, &EnumOptions::default()).unwrap());
        }
        for f in &legs {
            for g in &legs {
                out.push((f.clone(), g.clone()));
            }
        }
    }
    out
}

fn map(dom: Graph, cod: &Arc<Graph>, a: &[usize]) -> GraphMap {
    GraphMap::new(dom, Arc::clone(cod), a.to_vec()).unwrap()
}

#[test]
fn tree_amalgamation_certifies_on_rooted_pairs() {
    let ps = pairs(5, &ORDER, true);
    assert!(ps.len() > 10_000);
    let bad = par::map(&ps, |(f, g)| {
        let r = tree_amalgamate(f, g).unwrap();
        let ok = is_tree(&r.d)
            && r.certificate.commutes
            && r.f0.holds(Property::OrderPreserving).unwrap()
            && r.g0.holds(Property::OrderPreserving).unwrap();
        (!ok).then(|| (f.clone(), g.clone()))
    });
    assert_eq!(bad.into_iter().flatten().next(), None);
}

#[test]
fn tree_amalgamation_ends_fail_only_across_fibers() {
    // A lost end of f0 sits over a vertex of B whose children all leave its fiber.
    let c = Constraints {
        confluent: true,
        end: true,
        ..ORDER
    };
    let ps = pairs(5, &c, true);
    let outcomes = par::map(&ps, |(f, g)| {
        let r = tree_amalgamate(f, g).unwrap();
        let mut lost = 0;
        for (leg, low, low_leg) in [(&r.f0, f.dom(), f), (&r.g0, g.dom(), g)] {
            let o = RootOrder::new(low, 0).unwrap();
            let d_order = RootOrder::new(&r.d, 0).unwrap();
            for x in r.d.vertices().filter(|&x| d_order.children(x).is_empty()) {
                let b = leg.apply(x);
                if o.children(b).is_empty() {
                    continue;
                }
                lost += 1;
                let inside = o.children(b).iter().any(|&w| low_leg.apply(w) == low_leg.apply(b));
                if inside {
                    return Err((f.assign().to_vec(), g.assign().to_vec()));
                }
            }
        }
        Ok(lost)
    });
    let mut lost = 0;
    for o in outcomes {
        lost += o.unwrap();
    }
    assert!(lost > 0);
}

#[test]
fn tree_amalgamation_can_lose_end_preservation() {
    // Rooted cherry A; both legs confluent, order- and end-preserving.
    let a = Arc::new(Graph::star(2));
    let b = Graph::new(4, [(0, 1), (0, 2), (1, 3)]).unwrap();
    let f = map(b.clone(), &a, &[0, 0, 1, 2]).with_roots(0, 0).unwrap();
    let g = map(b, &a, &[0, 0, 2, 1]).with_roots(0, 0).unwrap();
    for m in [&f, &g] {
        for p in [Property::Confluent, Property::OrderPreserving, Property::EndPreserving] {
            assert!(m.holds(p).unwrap());
        }
    }
    let r = tree_amalgamate(&f, &g).unwrap();
    assert!(r.certificate.commutes && r.certificate.d_is_tree);
    assert!(!r.f0.holds(Property::EndPreserving).unwrap());
    assert!(!r.g0.holds(Property::EndPreserving).unwrap());
    let c = Constraints {
        confluent: true,
        end: true,
        ..ORDER
    };
    let found = search_amalgamate(&f, &g, &c, 8).unwrap().unwrap();
    assert_eq!(found.d.n(), 5);
}

#[test]
fn tree_amalgamation_can_lose_confluence() {
    // Rooted cherry A; both legs confluent, order- and end-preserving.
    let a = Arc::new(Graph::star(2));
    let f = map(Graph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap(), &a, &[0, 0, 1, 2])
        .with_roots(0, 0)
        .unwrap();
    let g = map(Graph::new(4, [(0, 1), (0, 2), (1, 3)]).unwrap(), &a, &[0, 0, 1, 2])
        .with_roots(0, 0)
        .unwrap();
    for m in [&f, &g] {
        for p in [Property::Confluent, Property::OrderPreserving, Property::EndPreserving] {
            assert!(m.holds(p).unwrap());
        }
    }
    let r = tree_amalgamate(&f, &g).unwrap();
    assert!(r.certificate.commutes && r.certificate.d_is_tree);
    assert!(!r.f0.holds(Property::Confluent).unwrap());
    // Another tree does carry confluent legs, so the square exists.
    let c = Constraints {
        confluent: true,
        ..ORDER
    };
    assert!(search_amalgamate(&f, &g, &c, 8).unwrap().is_some());
}

#[test]
fn rooted_light_pullbacks_are_trees() {
    let c = Constraints { light: true, ..ORDER };
    let ts: Vec<Arc<Graph>> = enumerate_rooted_trees_up_to(6).into_iter().map(Arc::new).collect();
    let mut checked = 0;
    for a in &ts {
        let mut light = Vec::new();
        let mut any = Vec::new();
        for b in ts.iter().filter(|b| b.n() >= a.n()) {
            light.extend(
                enumerate_epis(Arc::clone(b), Arc::clone(a), &c, Some((0, 0)), &EnumOptions::default()).unwrap(),
            );
            any.extend(
                enumerate_epis(
                    Arc::clone(b),
                    Arc::clone(a),
                    &ORDER,
                    Some((0, 0)),
                    &EnumOptions::default(),
                )
                .unwrap(),
            );
        }
        for f in &light {
            for g in &any {
                assert!(is_tree(&pullback(f, g).unwrap().graph), "{f:?} {g:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn monotone_amalgamation_certifies_and_agrees_with_search() {
    let mono = Constraints::monotone();
    let ps = pairs(5, &mono, false);
    assert!(ps.len() > 5000);
    let bad = par::map(&ps, |(f, g)| {
        let r = monotone_amalgamate(f, g).unwrap();
        let big = f.dom().n().max(g.dom().n());
        let ok = r.passes(&mono) && r.d.n() >= big && search_amalgamate(f, g, &mono, 9).unwrap().is_some();
        (!ok).then(|| (f.assign().to_vec(), g.assign().to_vec()))
    });
    assert_eq!(bad.into_iter().flatten().next(), None);
}

#[test]
fn end_preserving_amalgamation_certifies() {
    let c = Constraints { end: true, ..ORDER };
    let ps = pairs(5, &c, true);
    let bad = par::map(&ps, |(f, g)| {
        let r = end_preserving_amalgamate(f, g).unwrap();
        (!r.passes(&c)).then(|| (f.assign().to_vec(), g.assign().to_vec()))
    });
    assert_eq!(bad.into_iter().flatten().next(), None);
}

#[test]
fn composite_either_certifies_or_reports_failure() {
    let c = Constraints {
        confluent: true,
        ..ORDER
    };
    let ps = pairs(4, &c, true);
    let outcomes = par::map(&ps, |(f, g)| match confluent_amalgamate(f, g) {
        Ok(r) => r.passes(&c),
        Err(Error::ConstructionFailed(_)) => true,
        Err(_) => false,
    });
    assert!(outcomes.iter().all(|&ok| ok));
}

#[test]
fn composite_meets_the_monotone_obstruction() {
    // Both monotone parts over the light pullback cross their leaf pairs.
    let a = Arc::new(Graph::path(2));
    let b = Graph::new(4, [(0, 1), (0, 2), (1, 3)]).unwrap();
    let f = map(b, &a, &[0, 0, 1, 1]).with_roots(0, 0).unwrap();
    assert!(matches!(
        confluent_amalgamate(&f, &f),
        Err(Error::ConstructionFailed(_))
    ));
}

#[test]
fn small_search_examples() {
    let a = Arc::new(Graph::path(2));
    let f = map(Graph::path(3), &a, &[0, 0, 1]);
    let r = search_amalgamate(&f, &f, &Constraints::monotone(), 8).unwrap().unwrap();
    assert!(r.d.n() <= 3);
    let g = map(Graph::star(3), &a, &[0, 1, 1, 0]);
    let r = search_amalgamate(&g, &g, &Constraints::NONE, 8).unwrap().unwrap();
    assert_eq!(r.d.n(), 4);
}

#[test]
fn component_of_the_folded_paths_is_a_cycle() {
    let a = Arc::new(Graph::path(2));
    let b = Graph::new(3, [(0, 2), (2, 1)]).unwrap();
    let f = map(b.clone(), &a, &[0, 0, 1]);
    let g = map(b, &a, &[1, 1, 0]);
    let r = component_amalgamate(&f, &g).unwrap();
    assert!(!r.certificate.d_is_tree);
    assert_eq!((r.d.n(), r.d.edge_count()), (4, 4));
    assert!((0..4).all(|v| r.d.order(v) == 2));
    assert_eq!(
        (r.certificate.f0.confluent, r.certificate.g0.confluent),
        (Some(true), Some(true))
    );
}

#[test]
fn identity_leg_pullback_is_the_other_domain() {
    for t in enumerate_trees_up_to(5) {
        let t = Arc::new(t);
        let maps = enumerate_epis(
            Arc::clone(&t),
            Arc::new(Graph::path(2)),
            &Constraints::NONE,
            None,
            &EnumOptions::default(),
        )
        .unwrap();
        for f in maps {
            let id = GraphMap::identity(f.cod_arc());
            let p = pullback(&f, &id).unwrap();
            assert_eq!(canonical_form(&p.graph), canonical_form(&t));
            assert_eq!(p.f0.assign(), (0..t.n()).collect::<Vec<_>>());
        }
    }
}
