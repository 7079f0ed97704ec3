//! Exhaustive desk-scale checks of the structural facts the constructions
//! rely on: propagation through pullbacks, monotone-light factorization,
//! monotone images of arcs, lifting of end vertices and cofinality of trees
//! with ramification order at most three.
//!
//! Every suite enumerates its instances up front, checks them through
//! [`par::map`] and keeps the first few counterexamples.

use std::sync::Arc;

use serde::Serialize;

use crate::amalgamation::pullback;
use crate::canon::{enumerate_rooted_trees_up_to, enumerate_trees_up_to};
use crate::error::Result;
use crate::factorization::ml_factorize;
use crate::families::{is_tm3, split_ramification, Counterexample};
use crate::graph::{is_arc, Graph};
use crate::morphisms::{compose, enumerate_epis, Constraints, EnumOptions, GraphMap, Property};
use crate::par;
use crate::rooted::rooted_end_vertices;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub suite: String,
    pub cap: usize,
    pub instances: usize,
    pub failures: usize,
    pub passed: bool,
    pub counterexamples: Vec<Counterexample>,
}

const KEPT: usize = 5;

fn report(suite: &str, cap: usize, outcomes: Vec<Option<Counterexample>>) -> OracleReport {
    let instances = outcomes.len();
    let fails: Vec<Counterexample> = outcomes.into_iter().flatten().collect();
    OracleReport {
        suite: suite.into(),
        cap,
        instances,
        failures: fails.len(),
        passed: fails.is_empty(),
        counterexamples: fails.into_iter().take(KEPT).collect(),
    }
}

fn fail(detail: impl Into<String>, maps: &[&GraphMap]) -> Option<Counterexample> {
    Some(Counterexample {
        detail: detail.into(),
        maps: maps.iter().map(|m| (*m).clone()).collect(),
    })
}

fn opts() -> EnumOptions {
    EnumOptions {
        max_dom: 12,
        ..EnumOptions::default()
    }
}

/// All epimorphisms passing `c` from trees in `doms` onto `cod`.
fn epis_onto(doms: &[Arc<Graph>], cod: &Arc<Graph>, c: &Constraints, rooted: bool) -> Result<Vec<GraphMap>> {
    let mut out = Vec::new();
    for d in doms.iter().filter(|d| d.n() >= cod.n()) {
        out.extend(enumerate_epis(
            Arc::clone(d),
            Arc::clone(cod),
            c,
            rooted.then_some((0, 0)),
            &opts(),
        )?);
    }
    Ok(out)
}

fn arcs(v: Vec<Graph>) -> Vec<Arc<Graph>> {
    v.into_iter().map(Arc::new).collect()
}

const PROPAGATED: [Property; 3] = [Property::Light, Property::Monotone, Property::Confluent];

/// For every ordered pair of epimorphisms `f: B -> A`, `g: C -> A` between
/// trees with at most `cap` vertices, each of light, monotone and confluent
/// passes from `f` to the pullback projection onto `C`.
pub fn pullback_propagation(cap: usize) -> Result<OracleReport> {
    let trees = arcs(enumerate_trees_up_to(cap));
    let mut pairs = Vec::new();
    for a in &trees {
        let legs = Arc::new(epis_onto(&trees, a, &Constraints::NONE, false)?);
        for i in 0..legs.len() {
            for j in 0..legs.len() {
                pairs.push((Arc::clone(&legs), i, j));
            }
        }
    }
    let outcomes = par::map(&pairs, |(legs, i, j)| {
        let (f, g) = (&legs[*i], &legs[*j]);
        let p = match pullback(f, g) {
            Ok(p) => p,
            Err(e) => return fail(e.to_string(), &[f, g]),
        };
        for prop in PROPAGATED {
            let holds = |m: &GraphMap| m.holds(prop).unwrap_or(false);
            if holds(f) && !holds(&p.g0) {
                return fail(format!("{prop} does not reach the projection onto C"), &[f, g]);
            }
        }
        None
    });
    Ok(report("pullback-propagation", cap, outcomes))
}

/// For every epimorphism between trees with at most `cap` vertices the
/// factorization recomposes to `f`, its parts are monotone and light, and a
/// confluent `f` has confluent parts.
pub fn factorization(cap: usize) -> Result<OracleReport> {
    let trees = arcs(enumerate_trees_up_to(cap));
    let mut maps = Vec::new();
    for a in &trees {
        maps.extend(epis_onto(&trees, a, &Constraints::NONE, false)?);
    }
    let outcomes = par::map(&maps, |f| {
        let fac = match ml_factorize(f) {
            Ok(fac) => fac,
            Err(e) => return fail(e.to_string(), &[f]),
        };
        let holds = |m: &GraphMap, p| m.holds(p).unwrap_or(false);
        match compose(&fac.m, &fac.l) {
            Ok(h) if h.assign() == f.assign() => {}
            _ => return fail("the parts do not recompose to f", &[f]),
        }
        if !holds(&fac.m, Property::Monotone) || !holds(&fac.m, Property::Epimorphism) {
            return fail("first part is not a monotone epimorphism", &[f, &fac.m]);
        }
        if !holds(&fac.l, Property::Light) || !holds(&fac.l, Property::Epimorphism) {
            return fail("second part is not a light epimorphism", &[f, &fac.l]);
        }
        if holds(f, Property::Confluent) && !(holds(&fac.m, Property::Confluent) && holds(&fac.l, Property::Confluent))
        {
            return fail("confluent map with a non-confluent part", &[f, &fac.m, &fac.l]);
        }
        None
    });
    Ok(report("factorization", cap, outcomes))
}

/// Monotone epimorphisms from a path with at most `cap` vertices: the image
/// is an arc and the path's endpoints land on its endpoints. A single-vertex
/// image counts as a degenerate arc whose endpoints coincide.
pub fn monotone_arcs(cap: usize) -> Result<OracleReport> {
    let trees = arcs(enumerate_trees_up_to(cap));
    let mut maps = Vec::new();
    for n in 1..=cap {
        let p = vec![Arc::new(Graph::path(n))];
        for a in trees.iter().filter(|a| a.n() <= n) {
            maps.extend(epis_onto(&p, a, &Constraints::monotone(), false)?);
        }
    }
    let outcomes = par::map(&maps, |f| {
        let ends = (f.apply(0), f.apply(f.dom().n() - 1));
        let ok = match is_arc(f.cod()) {
            Some((x, y)) => ends == (x, y) || ends == (y, x),
            None => f.cod().n() == 1,
        };
        if ok {
            None
        } else {
            fail("image is not an arc spanned by the endpoint images", &[f])
        }
    });
    Ok(report("monotone-arc", cap, outcomes))
}

/// Order-preserving epimorphisms between rooted trees with at most `cap`
/// vertices: every end vertex of the codomain (maximal in the root order)
/// is the image of an end vertex of the domain.
pub fn end_lifting(cap: usize) -> Result<OracleReport> {
    let trees = arcs(enumerate_rooted_trees_up_to(cap));
    let c = Constraints {
        order: true,
        ..Constraints::NONE
    };
    let mut maps = Vec::new();
    for a in &trees {
        maps.extend(epis_onto(&trees, a, &c, true)?);
    }
    let outcomes = par::map(&maps, |f| {
        let (dom_ends, cod_ends) = match (rooted_end_vertices(f.dom(), 0), rooted_end_vertices(f.cod(), 0)) {
            (Ok(d), Ok(c)) => (d, c),
            _ => return fail("not a rooted tree", &[f]),
        };
        let unlifted = cod_ends.iter().find(|&y| !dom_ends.iter().any(|x| f.apply(x) == y));
        unlifted.and_then(|y| fail(format!("end vertex {y} has no end vertex over it"), &[f]))
    });
    Ok(report("end-lifting", cap, outcomes))
}

/// Every tree with at most `cap` vertices is the monotone image of its
/// ramification split, which has orders at most three and no adjacent
/// order-three vertices.
pub fn tm3_cofinality(cap: usize) -> Result<OracleReport> {
    let trees = enumerate_trees_up_to(cap);
    let outcomes = par::map(&trees, |t| match split_ramification(t) {
        Ok((s, m)) => {
            let ok = is_tm3(&s)
                && m.cod() == t
                && m.holds(Property::Epimorphism).unwrap_or(false)
                && m.holds(Property::Monotone).unwrap_or(false);
            if ok {
                None
            } else {
                fail(format!("split of a {}-vertex tree", t.n()), &[&m])
            }
        }
        Err(e) => fail(e.to_string(), &[]),
    });
    Ok(report("tm3-cofinality", cap, outcomes))
}
