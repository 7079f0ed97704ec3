use std::sync::Arc;

use fraisse_core::canon::{enumerate_rooted_trees_up_to, enumerate_trees_up_to};
use fraisse_core::factorization::ml_factorize;
use fraisse_core::graph::is_tree;
use fraisse_core::morphisms::{compose, enumerate_epis, EnumOptions};
use fraisse_core::rooted::{branches, is_uniform_fan, tree_to_uniform_fan, RootOrder};
use fraisse_core::{Constraints, Graph, GraphMap, Property, RootedTree};

fn rooted(cap: usize) -> Vec<Arc<Graph>> {
    enumerate_rooted_trees_up_to(cap).into_iter().map(Arc::new).collect()
}

fn order_epis(cap: usize, c: Constraints) -> Vec<GraphMap> {
    let ts = rooted(cap);
    let mut out = Vec::new();
    for d in &ts {
        for a in ts.iter().filter(|a| a.n() <= d.n()) {
            out.extend(
                enumerate_epis(Arc::clone(d), Arc::clone(a), &c, Some((0, 0)), &EnumOptions::default()).unwrap(),
            );
        }
    }
    out
}

const ORDER: Constraints = Constraints {
    order: true,
    ..Constraints::NONE
};

#[test]
fn root_order_is_a_tree_order() {
    for t in rooted(7) {
        let o = RootOrder::new(&t, 0).unwrap();
        let vs: Vec<usize> = t.vertices().collect();
        for &x in &vs {
            assert!(o.leq(0, x) && o.leq(x, x));
            for &y in &vs {
                if x != y && o.leq(x, y) {
                    assert!(!o.leq(y, x));
                }
                for &z in &vs {
                    if o.leq(x, y) && o.leq(y, z) {
                        assert!(o.leq(x, z));
                    }
                }
            }
        }
        for &(a, b) in t.edges() {
            assert!(o.comparable(a, b));
            let (lo, hi) = if o.leq(a, b) { (a, b) } else { (b, a) };
            assert!(vs
                .iter()
                .all(|&c| c == lo || c == hi || !(o.leq(lo, c) && o.leq(c, hi))));
        }
    }
}

#[test]
fn branches_cover_and_meet_in_root_chains() {
    for t in rooted(7) {
        let rt = RootedTree::new(Arc::clone(&t), 0).unwrap();
        let bs = branches(&rt);
        let mut covered = vec![false; t.n()];
        for b in &bs {
            assert_eq!(b.verts[0], 0);
            for &v in &b.verts {
                covered[v] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
        for (i, p) in bs.iter().enumerate() {
            for q in &bs[i + 1..] {
                let common = p.verts.iter().zip(&q.verts).take_while(|(a, b)| a == b).count();
                let shared = p.verts.iter().filter(|v| q.verts.contains(v)).count();
                assert!(common >= 1);
                assert_eq!(common, shared, "branches meet outside their common prefix");
            }
        }
    }
}

#[test]
fn uniform_fan_collapse_composes_with_end_preserving_maps() {
    let ends = Constraints { end: true, ..ORDER };
    let maps = order_epis(6, ends);
    for t in rooted(6) {
        let rt = RootedTree::new(Arc::clone(&t), 0).unwrap();
        let (fan, collapse) = tree_to_uniform_fan(&rt);
        assert!(is_uniform_fan(&fan));
        for p in [
            Property::Epimorphism,
            Property::OrderPreserving,
            Property::EndPreserving,
        ] {
            assert!(collapse.holds(p).unwrap(), "{p} on the collapse of {t:?}");
        }
        for g in maps.iter().filter(|g| g.dom() == &*t) {
            let h = compose(&collapse, g).unwrap();
            for p in [
                Property::Epimorphism,
                Property::OrderPreserving,
                Property::EndPreserving,
            ] {
                assert!(h.holds(p).unwrap(), "{p} after the collapse of {t:?}");
            }
        }
    }
}

#[test]
fn rooted_factorization_stays_in_rooted_trees() {
    for f in order_epis(7, ORDER) {
        let fac = ml_factorize(&f).unwrap();
        assert!(is_tree(&fac.middle));
        assert_eq!(fac.m.roots(), Some((0, fac.classmap[0])));
        assert!(fac.m.holds(Property::OrderPreserving).unwrap(), "{f:?}");
        assert!(fac.l.holds(Property::OrderPreserving).unwrap(), "{f:?}");
    }
}

#[test]
fn factorization_is_idempotent() {
    let ts: Vec<Arc<Graph>> = enumerate_trees_up_to(6).into_iter().map(Arc::new).collect();
    for d in &ts {
        for a in ts.iter().filter(|a| a.n() <= d.n()) {
            for f in enumerate_epis(
                Arc::clone(d),
                Arc::clone(a),
                &Constraints::NONE,
                None,
                &EnumOptions::default(),
            )
            .unwrap()
            {
                let fac = ml_factorize(&f).unwrap();
                let of_m = ml_factorize(&fac.m).unwrap();
                assert_eq!(of_m.middle.n(), fac.middle.n(), "light part of m is a bijection");
                let of_l = ml_factorize(&fac.l).unwrap();
                assert_eq!(of_l.middle.n(), fac.middle.n(), "monotone part of l is a bijection");
                assert_eq!(of_l.m.assign(), (0..fac.middle.n()).collect::<Vec<_>>());
            }
        }
    }
}
