//! Amalgamation constructions over a common codomain `A`: for `f: B -> A` and
//! `g: C -> A`, build `D` with `f0: D -> B`, `g0: D -> C` and `f∘f0 = g∘g0`.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::canon::{enumerate_rooted_trees, enumerate_trees};
use crate::error::{Error, Result};
use crate::factorization::ml_factorize;
use crate::graph::{components, is_tree, Graph, Vertex, VertexSet};
use crate::morphisms::{
    compose, enumerate_epis, is_confluent, is_end_preserving, is_epimorphism, is_light, is_monotone,
    is_order_preserving, same_graph, Constraints, EnumOptions, GraphMap,
};
use crate::par;
use crate::rooted::{branches, stretch_fan, tree_to_uniform_fan, RootOrder, RootedTree};

/// Checker verdicts for one leg; `None` where the checker does not apply.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapVerdicts {
    pub epimorphism: bool,
    pub monotone: Option<bool>,
    pub confluent: Option<bool>,
    pub light: Option<bool>,
    pub order_preserving: Option<bool>,
    pub end_preserving: Option<bool>,
}

impl MapVerdicts {
    pub fn of(m: &GraphMap) -> Self {
        let epi = matches!(is_epimorphism(m), Ok(r) if r.verdict);
        let ok = |r: Result<crate::morphisms::PropertyReport>| r.ok().map(|r| r.verdict);
        let (order, end) = match m.roots() {
            Some((rd, rc)) => (
                ok(is_order_preserving(m, rd, rc)),
                ok(is_end_preserving(m, Some((rd, rc)))),
            ),
            None => (None, None),
        };
        MapVerdicts {
            epimorphism: epi,
            monotone: ok(is_monotone(m)),
            confluent: ok(is_confluent(m)),
            light: ok(is_light(m)),
            order_preserving: order,
            end_preserving: end,
        }
    }

    pub fn meets(&self, c: &Constraints) -> bool {
        let need = |flag: bool, v: Option<bool>| !flag || v == Some(true);
        self.epimorphism
            && need(c.monotone, self.monotone)
            && need(c.confluent, self.confluent)
            && need(c.light, self.light)
            && need(c.order, self.order_preserving)
            && need(c.end, self.end_preserving)
    }
}

/// Recomputed facts about an amalgamation square.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub commutes: bool,
    pub d_is_tree: bool,
    pub f0: MapVerdicts,
    pub g0: MapVerdicts,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmalgamationResult {
    pub d: Arc<Graph>,
    pub root: Option<Vertex>,
    pub f0: GraphMap,
    pub g0: GraphMap,
    pub certificate: Certificate,
}

impl AmalgamationResult {
    /// Wraps a candidate square and recomputes its certificate.
    pub fn certify(f: &GraphMap, g: &GraphMap, f0: GraphMap, g0: GraphMap) -> Self {
        let d = f0.dom_arc();
        let commutes = same_graph(f0.dom(), g0.dom())
            && same_graph(f0.cod(), f.dom())
            && same_graph(g0.cod(), g.dom())
            && same_graph(f.cod(), g.cod())
            && (0..d.n()).all(|x| f.apply(f0.apply(x)) == g.apply(g0.apply(x)));
        let certificate = Certificate {
            commutes,
            d_is_tree: is_tree(&d),
            f0: MapVerdicts::of(&f0),
            g0: MapVerdicts::of(&g0),
        };
        let root = f0.roots().map(|r| r.0);
        AmalgamationResult {
            d,
            root,
            f0,
            g0,
            certificate,
        }
    }

    /// Commuting square of tree epimorphisms meeting `c` on both legs.
    pub fn passes(&self, c: &Constraints) -> bool {
        let cert = &self.certificate;
        cert.commutes && cert.d_is_tree && cert.f0.meets(c) && cert.g0.meets(c)
    }
}

fn check_common_codomain(f: &GraphMap, g: &GraphMap) -> Result<()> {
    if !same_graph(f.cod(), g.cod()) {
        return Err(Error::MismatchedGraphs("the two maps have different codomains".into()));
    }
    Ok(())
}

/// Roots of the square when both maps are rooted consistently.
fn common_roots(f: &GraphMap, g: &GraphMap) -> Result<Option<(Vertex, Vertex)>> {
    match (f.roots(), g.roots()) {
        (Some((rb, ra)), Some((rc, ra2))) => {
            if ra != ra2 {
                return Err(Error::MismatchedGraphs(format!(
                    "the maps root the codomain differently ({ra} vs {ra2})"
                )));
            }
            Ok(Some((rb, rc)))
        }
        _ => Ok(None),
    }
}

fn require_rooted(f: &GraphMap, g: &GraphMap) -> Result<(Vertex, Vertex)> {
    common_roots(f, g)?.ok_or(Error::NotRooted)
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(what.into()))
    }
}

fn passes_all(m: &GraphMap, c: &Constraints) -> bool {
    m.satisfies(c)
}

/// Standard amalgamation: pairs `(b, c)` with `f(b) = g(c)`, joined when both
/// coordinates are adjacent or equal. Pairs are listed lexicographically.
#[derive(Clone, Debug)]
pub struct OrderedPullback {
    pub graph: Arc<Graph>,
    pub pairs: Vec<(Vertex, Vertex)>,
    pub root: Option<Vertex>,
    pub f0: GraphMap,
    pub g0: GraphMap,
    orders: Option<(RootOrder, RootOrder)>,
}

impl OrderedPullback {
    pub fn index_of(&self, b: Vertex, c: Vertex) -> Option<Vertex> {
        self.pairs.binary_search(&(b, c)).ok()
    }

    /// Product order; `None` when the inputs are not rooted trees.
    pub fn leq(&self, i: Vertex, j: Vertex) -> Option<bool> {
        let (ob, oc) = self.orders.as_ref()?;
        let ((b1, c1), (b2, c2)) = (self.pairs[i], self.pairs[j]);
        Some(ob.leq(b1, b2) && oc.leq(c1, c2))
    }
}

pub fn pullback(f: &GraphMap, g: &GraphMap) -> Result<OrderedPullback> {
    check_common_codomain(f, g)?;
    let (b, c) = (f.dom(), g.dom());
    let mut pairs = Vec::new();
    for x in b.vertices() {
        for y in c.vertices() {
            if f.apply(x) == g.apply(y) {
                pairs.push((x, y));
            }
        }
    }
    let mut edges = Vec::new();
    for (i, &(b1, c1)) in pairs.iter().enumerate() {
        for (j, &(b2, c2)) in pairs.iter().enumerate().skip(i + 1) {
            if b.has_edge(b1, b2) && c.has_edge(c1, c2) {
                edges.push((i, j));
            }
        }
    }
    let labels = pairs
        .iter()
        .map(|&(x, y)| format!("({},{})", b.label(x), c.label(y)))
        .collect();
    let graph = Arc::new(Graph::new(pairs.len(), edges)?.with_labels(labels)?);
    let mut f0 = GraphMap::new(Arc::clone(&graph), f.dom_arc(), pairs.iter().map(|p| p.0).collect())?;
    let mut g0 = GraphMap::new(Arc::clone(&graph), g.dom_arc(), pairs.iter().map(|p| p.1).collect())?;
    let mut root = None;
    let mut orders = None;
    if let Some((rb, rc)) = common_roots(f, g)? {
        if let Ok(i) = pairs.binary_search(&(rb, rc)) {
            root = Some(i);
            f0 = f0.with_roots(i, rb)?;
            g0 = g0.with_roots(i, rc)?;
            if let (Ok(ob), Ok(oc)) = (RootOrder::new(b, rb), RootOrder::new(c, rc)) {
                orders = Some((ob, oc));
            }
        }
    }
    Ok(OrderedPullback {
        graph,
        pairs,
        root,
        f0,
        g0,
        orders,
    })
}

/// The pullback itself as a (possibly non-tree) square.
pub fn pullback_amalgamate(f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
    let p = pullback(f, g)?;
    Ok(AmalgamationResult::certify(f, g, p.f0, p.g0))
}

/// Restricts both projections of a pullback to the vertex subset `keep`.
fn restrict(p: &OrderedPullback, keep: &VertexSet, root: Option<Vertex>) -> Result<(GraphMap, GraphMap)> {
    let (d, old_of) = p.graph.induced(keep);
    let d = Arc::new(d);
    let mut f0 = GraphMap::new(
        Arc::clone(&d),
        p.f0.cod_arc(),
        old_of.iter().map(|&v| p.f0.apply(v)).collect(),
    )?;
    let mut g0 = GraphMap::new(
        Arc::clone(&d),
        p.g0.cod_arc(),
        old_of.iter().map(|&v| p.g0.apply(v)).collect(),
    )?;
    if let Some(r) = root {
        let nr = old_of.iter().position(|&v| v == r).expect("root kept");
        let (rb, rc) = p.pairs[r];
        f0 = f0.with_roots(nr, rb)?;
        g0 = g0.with_roots(nr, rc)?;
    }
    Ok((f0, g0))
}

/// One connected component of the pullback: the one holding the root pair
/// when the maps are rooted, otherwise the one holding the first pair.
pub fn component_amalgamate(f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
    check_common_codomain(f, g)?;
    for (m, side) in [(f, "first"), (g, "second")] {
        require(
            components(m.dom(), &m.dom().all())?.count() == 1,
            &format!("{side} domain is disconnected"),
        )?;
        require(
            matches!(is_confluent(m), Ok(r) if r.verdict),
            &format!("{side} map is not a confluent epimorphism"),
        )?;
    }
    require(
        components(f.cod(), &f.cod().all())?.count() == 1,
        "common codomain is disconnected",
    )?;
    let p = pullback(f, g)?;
    let seed = p.root.unwrap_or(0);
    let parts = components(&p.graph, &p.graph.all())?;
    let id = parts.component_of(seed).expect("pullback is nonempty");
    let keep = VertexSet::from_vertices(
        p.graph.n(),
        p.graph.vertices().filter(|&v| parts.component_of(v) == Some(id)),
    )?;
    let (f0, g0) = restrict(&p, &keep, p.root)?;
    Ok(AmalgamationResult::certify(f, g, f0, g0))
}

/// Upper bound on the number of chains built by [`tree_amalgamate`].
pub const CHAIN_BUDGET: usize = 1_000_000;

/// Chains of the ordered pullback: root-anchored, each step to an adjacent,
/// strictly larger pair. `D` has one vertex per chain (depth-first order,
/// root chain first) and an edge between a chain and each one-step extension.
pub fn tree_amalgamate(f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
    check_common_codomain(f, g)?;
    let (rb, rc) = require_rooted(f, g)?;
    let order = Constraints {
        order: true,
        ..Constraints::NONE
    };
    require(
        passes_all(f, &order) && passes_all(g, &order),
        "tree amalgamation needs order-preserving epimorphisms of rooted trees",
    )?;
    let p = pullback(f, g)?;
    let root = p.index_of(rb, rc).expect("root pair is in the pullback");
    let strictly_above = |i: Vertex, j: Vertex| i != j && p.leq(i, j) == Some(true);

    let mut last = vec![root];
    let mut parent = vec![usize::MAX];
    let mut stack = vec![0usize];
    let mut edges = Vec::new();
    let mut order_of_visit = Vec::new();
    while let Some(id) = stack.pop() {
        order_of_visit.push(id);
        let top = last[id];
        for &w in p.graph.neighbors(top).iter().rev() {
            if strictly_above(top, w) {
                if last.len() >= CHAIN_BUDGET {
                    return Err(Error::BudgetExceeded(format!(
                        "more than {CHAIN_BUDGET} chains in the tree amalgamation"
                    )));
                }
                let child = last.len();
                last.push(w);
                parent.push(id);
                stack.push(child);
            }
        }
    }
    // Renumber in depth-first preorder so the output is stable and rooted at 0.
    let mut new_id = vec![0; last.len()];
    for (pos, &id) in order_of_visit.iter().enumerate() {
        new_id[id] = pos;
    }
    for id in 1..last.len() {
        edges.push((new_id[parent[id]], new_id[id]));
    }
    let mut tip = vec![0; last.len()];
    for id in 0..last.len() {
        tip[new_id[id]] = last[id];
    }
    let labels = tip.iter().map(|&t| p.graph.label(t)).collect();
    let d = Arc::new(Graph::new(tip.len(), edges)?.with_labels(labels)?);
    let f0 =
        GraphMap::new(Arc::clone(&d), f.dom_arc(), tip.iter().map(|&t| p.pairs[t].0).collect())?.with_roots(0, rb)?;
    let g0 = GraphMap::new(d, g.dom_arc(), tip.iter().map(|&t| p.pairs[t].1).collect())?.with_roots(0, rc)?;
    Ok(AmalgamationResult::certify(f, g, f0, g0))
}

/// Recursion step budget for [`monotone_amalgamate`].
pub const MONOTONE_STEP_BUDGET: u64 = 200_000;

#[derive(Clone)]
struct MonoInst {
    a: Graph,
    b: Graph,
    c: Graph,
    f: Vec<Vertex>,
    g: Vec<Vertex>,
}

struct MonoSol {
    d: Graph,
    alpha: Vec<Vertex>,
    beta: Vec<Vertex>,
}

type Cont<'a> = dyn FnMut(MonoSol) -> Result<bool> + 'a;

fn without(g: &Graph, drop: &[Vertex]) -> (Graph, Vec<Vertex>) {
    let keep: VertexSet = g.vertices().filter(|v| !drop.contains(v)).collect();
    let mut keep_full = VertexSet::empty(g.n());
    keep_full.union_with(&keep);
    let (h, old) = g.induced(&keep_full);
    (h.unlabeled(), old)
}

fn index_in(old_of: &[Vertex], v: Vertex) -> Vertex {
    old_of.iter().position(|&x| x == v).expect("kept vertex")
}

fn swap_inst(i: &MonoInst) -> MonoInst {
    MonoInst {
        a: i.a.clone(),
        b: i.c.clone(),
        c: i.b.clone(),
        f: i.g.clone(),
        g: i.f.clone(),
    }
}

fn tick(steps: &Cell<u64>) -> Result<()> {
    let s = steps.get() + 1;
    steps.set(s);
    if s > MONOTONE_STEP_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "monotone amalgamation exceeded {MONOTONE_STEP_BUDGET} steps"
        )));
    }
    Ok(())
}

/// Backtracking form of the induction on the number of edges of `B` and `C`.
/// Every complete candidate is passed to `k`; a `true` answer stops the search.
fn mono_rec(inst: &MonoInst, steps: &Cell<u64>, k: &mut Cont<'_>) -> Result<bool> {
    tick(steps)?;
    if inst.b.n() == 1 {
        return k(MonoSol {
            d: inst.c.clone(),
            alpha: vec![0; inst.c.n()],
            beta: inst.c.vertices().collect(),
        });
    }
    if inst.c.n() == 1 {
        return k(MonoSol {
            d: inst.b.clone(),
            alpha: inst.b.vertices().collect(),
            beta: vec![0; inst.b.n()],
        });
    }
    for leaf in inst.b.vertices().filter(|&v| inst.b.order(v) == 1) {
        if strip_leaf(inst, leaf, steps, k)? {
            return Ok(true);
        }
    }
    let swapped = swap_inst(inst);
    for leaf in swapped.b.vertices().filter(|&v| swapped.b.order(v) == 1) {
        let mut back = |s: MonoSol| {
            k(MonoSol {
                d: s.d,
                alpha: s.beta,
                beta: s.alpha,
            })
        };
        if strip_leaf(&swapped, leaf, steps, &mut back)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Removes the leaf `b` of `B` (neighbor `a`) and recurses.
fn strip_leaf(inst: &MonoInst, b: Vertex, steps: &Cell<u64>, k: &mut Cont<'_>) -> Result<bool> {
    let a = inst.b.neighbors(b)[0];
    let (b2, old_b) = without(&inst.b, &[b]);
    let a_new = index_in(&old_b, a);
    let f2: Vec<Vertex> = old_b.iter().map(|&v| inst.f[v]).collect();

    if inst.f[a] == inst.f[b] {
        // The restriction is still onto A: hang a copy of b below any vertex over a.
        let sub = MonoInst {
            a: inst.a.clone(),
            b: b2,
            c: inst.c.clone(),
            f: f2,
            g: inst.g.clone(),
        };
        let mut k1 = |s: MonoSol| -> Result<bool> {
            for c in 0..s.d.n() {
                if s.alpha[c] != a_new {
                    continue;
                }
                let n = s.d.n();
                let mut edges = s.d.edges().to_vec();
                edges.push((c, n));
                let mut alpha: Vec<Vertex> = s.alpha.iter().map(|&v| old_b[v]).collect();
                alpha.push(b);
                let mut beta = s.beta.clone();
                beta.push(s.beta[c]);
                let sol = MonoSol {
                    d: Graph::new(n + 1, edges)?,
                    alpha,
                    beta,
                };
                if k(sol)? {
                    return Ok(true);
                }
                tick(steps)?;
            }
            Ok(false)
        };
        return mono_rec(&sub, steps, &mut k1);
    }

    // f(b) is a leaf x of A whose fiber is {b}; drop x and the part of C over it.
    let x = inst.f[b];
    let (a2, old_a) = without(&inst.a, &[x]);
    let fiber: Vec<Vertex> = inst.c.vertices().filter(|&v| inst.g[v] == x).collect();
    let (c2, old_c) = without(&inst.c, &fiber);
    let bridges: Vec<(Vertex, Vertex)> = inst
        .c
        .edges()
        .iter()
        .filter_map(|&(u, v)| match (fiber.contains(&u), fiber.contains(&v)) {
            (false, true) => Some((u, v)),
            (true, false) => Some((v, u)),
            _ => None,
        })
        .collect();
    if bridges.len() != 1 || c2.n() == 0 {
        return Ok(false);
    }
    let (p, q) = bridges[0];
    let p_new = index_in(&old_c, p);
    let sub = MonoInst {
        a: a2,
        b: b2,
        c: c2,
        f: f2.iter().map(|&y| index_in(&old_a, y)).collect(),
        g: old_c.iter().map(|&v| index_in(&old_a, inst.g[v])).collect(),
    };
    let mut k2 = |s: MonoSol| -> Result<bool> {
        for p2 in 0..s.d.n() {
            if s.beta[p2] != p_new || s.alpha[p2] != a_new {
                continue;
            }
            let n = s.d.n();
            let mut edges = s.d.edges().to_vec();
            let copy_of = |v: Vertex| n + fiber.iter().position(|&w| w == v).expect("in fiber");
            for &(u, v) in inst.c.edges() {
                if fiber.contains(&u) && fiber.contains(&v) {
                    edges.push((copy_of(u), copy_of(v)));
                }
            }
            edges.push((p2, copy_of(q)));
            let mut alpha: Vec<Vertex> = s.alpha.iter().map(|&v| old_b[v]).collect();
            alpha.extend(std::iter::repeat_n(b, fiber.len()));
            let mut beta: Vec<Vertex> = s.beta.iter().map(|&v| old_c[v]).collect();
            beta.extend(fiber.iter().copied());
            let sol = MonoSol {
                d: Graph::new(n + fiber.len(), edges)?,
                alpha,
                beta,
            };
            if k(sol)? {
                return Ok(true);
            }
            tick(steps)?;
        }
        Ok(false)
    };
    mono_rec(&sub, steps, &mut k2)
}

fn mono_core(f: &GraphMap, g: &GraphMap) -> Result<Option<(GraphMap, GraphMap)>> {
    let inst = MonoInst {
        a: f.cod().unlabeled(),
        b: f.dom().unlabeled(),
        c: g.dom().unlabeled(),
        f: f.assign().to_vec(),
        g: g.assign().to_vec(),
    };
    let monotone = Constraints::monotone();
    let steps = Cell::new(0);
    let mut found = None;
    let mut accept = |s: MonoSol| -> Result<bool> {
        if !is_tree(&s.d) {
            return Ok(false);
        }
        let d = Arc::new(s.d);
        let f0 = GraphMap::new(Arc::clone(&d), f.dom_arc(), s.alpha)?.without_roots();
        let g0 = GraphMap::new(d, g.dom_arc(), s.beta)?.without_roots();
        let ok = (0..f0.dom().n()).all(|x| f.apply(f0.apply(x)) == g.apply(g0.apply(x)))
            && f0.satisfies(&monotone)
            && g0.satisfies(&monotone);
        if ok {
            found = Some((f0, g0));
        }
        Ok(ok)
    };
    match mono_rec(&inst, &steps, &mut accept) {
        Ok(_) => Ok(found),
        Err(Error::BudgetExceeded(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn require_monotone_trees(f: &GraphMap, g: &GraphMap) -> Result<()> {
    check_common_codomain(f, g)?;
    for (m, side) in [(f, "first"), (g, "second")] {
        require(
            is_tree(m.dom()) && is_tree(m.cod()),
            &format!("{side} map is not between trees"),
        )?;
        require(
            m.satisfies(&Constraints::monotone()),
            &format!("{side} map is not a monotone epimorphism"),
        )?;
    }
    Ok(())
}

/// Tree amalgamation of monotone epimorphisms between trees by the leaf
/// stripping recursion, with backtracking over the free choices. When the
/// recursion finds nothing within its budget the exhaustive search is used.
pub fn monotone_amalgamate(f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
    let f = f.clone().without_roots();
    let g = g.clone().without_roots();
    require_monotone_trees(&f, &g)?;
    if let Some((f0, g0)) = mono_core(&f, &g)? {
        return Ok(AmalgamationResult::certify(&f, &g, f0, g0));
    }
    let cap = (f.dom().n() + g.dom().n()).min(SEARCH_FALLBACK_CAP);
    search_amalgamate(&f, &g, &Constraints::monotone(), cap)?.ok_or_else(|| {
        Error::ConstructionFailed(format!(
            "no monotone tree amalgamation found by the recursion or by search up to {cap} vertices"
        ))
    })
}

/// Largest candidate tree the constructions fall back to searching.
pub const SEARCH_FALLBACK_CAP: usize = 9;

/// Graph with one extra vertex adjacent to `at`; the new vertex is `n`.
fn with_pendant(g: &Graph, at: Vertex) -> Graph {
    let mut edges = g.edges().to_vec();
    edges.push((at, g.n()));
    Graph::new(g.n() + 1, edges).expect("pendant")
}

/// Rooted variant: the result is rooted, and both legs send the root to the
/// roots. A pendant vertex is hung below each root, the unrooted recursion
/// runs, and the fiber of the pendant is cut off again; the vertex it was
/// attached to becomes the root.
pub fn monotone_amalgamate_rooted(f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
    if let Some(res) = rooted_mono_core(f, g)? {
        return Ok(res);
    }
    let cap = (f.dom().n() + g.dom().n()).min(SEARCH_FALLBACK_CAP);
    search_amalgamate(f, g, &rooted_monotone(), cap)?.ok_or_else(|| {
        Error::ConstructionFailed(format!(
            "no rooted monotone amalgamation found by the recursion or by search up to {cap} vertices"
        ))
    })
}

fn rooted_monotone() -> Constraints {
    Constraints {
        monotone: true,
        order: true,
        ..Constraints::NONE
    }
}

fn rooted_mono_core(f: &GraphMap, g: &GraphMap) -> Result<Option<AmalgamationResult>> {
    let (rb, rc) = require_rooted(f, g)?;
    let ra = f.roots().expect("rooted").1;
    require_monotone_trees(f, g)?;
    let (b, c, a) = (f.dom(), g.dom(), f.cod());
    let (bp, cp, ap) = (with_pendant(b, rb), with_pendant(c, rc), with_pendant(a, ra));
    let mut fa = f.assign().to_vec();
    fa.push(a.n());
    let mut ga = g.assign().to_vec();
    ga.push(a.n());
    let ap = Arc::new(ap);
    let fp = GraphMap::new(bp, Arc::clone(&ap), fa)?;
    let gp = GraphMap::new(cp, ap, ga)?;
    let Some((f0, g0)) = mono_core(&fp, &gp)? else {
        return Ok(None);
    };
    let d = f0.dom();
    let cut: VertexSet = d.vertices().filter(|&v| f0.apply(v) == b.n()).collect();
    let mut keep = d.all();
    for v in cut.iter() {
        keep.remove(v);
    }
    let (d2, old) = d.induced(&keep);
    let bridge = d
        .edges()
        .iter()
        .find_map(|&(u, v)| match (cut.contains(u), cut.contains(v)) {
            (false, true) => Some(u),
            (true, false) => Some(v),
            _ => None,
        });
    let Some(bridge) = bridge else {
        return Ok(None);
    };
    let r = index_in(&old, bridge);
    let d2 = Arc::new(d2);
    let f1 =
        GraphMap::new(Arc::clone(&d2), f.dom_arc(), old.iter().map(|&v| f0.apply(v)).collect())?.with_roots(r, rb)?;
    let g1 = GraphMap::new(d2, g.dom_arc(), old.iter().map(|&v| g0.apply(v)).collect())?.with_roots(r, rc)?;
    let res = AmalgamationResult::certify(f, g, f1, g1);
    Ok(res.passes(&rooted_monotone()).then_some(res))
}

/// Confluent, order-preserving amalgamation: factor both maps, take the
/// rooted pullback `P` of the light parts, pull each monotone part back over
/// `P`, and close the square with the rooted monotone amalgamation.
pub fn confluent_amalgamate(f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
    check_common_codomain(f, g)?;
    require_rooted(f, g)?;
    let admissible = Constraints {
        confluent: true,
        order: true,
        ..Constraints::NONE
    };
    require(
        passes_all(f, &admissible) && passes_all(g, &admissible),
        "confluent amalgamation needs confluent order-preserving epimorphisms of rooted trees",
    )?;
    let ff = ml_factorize(f)?;
    let fg = ml_factorize(g)?;
    let p1 = pullback(&ff.l, &fg.l)?;
    require(is_tree(&p1.graph), "pullback of the light parts is not a tree")?;
    // Q1 over B and P, Q2 over C and P.
    let q1 = pullback(&ff.m, &p1.f0)?;
    let q2 = pullback(&fg.m, &p1.g0)?;
    require(
        is_tree(&q1.graph) && is_tree(&q2.graph),
        "monotone-side pullback is not a tree",
    )?;
    let inner = rooted_mono_core(&q1.g0, &q2.g0)?.ok_or_else(|| {
        Error::ConstructionFailed("the recursion found no rooted monotone amalgamation over the light pullback".into())
    })?;
    let f0 = compose(&inner.f0, &q1.f0)?;
    let g0 = compose(&inner.g0, &q2.f0)?;
    Ok(AmalgamationResult::certify(f, g, f0, g0))
}

/// Pairs of branch positions `(i, j)` walking two lazy monotone paths in
/// step, so that `s[i] == t[j]` throughout. Both sequences must start and end
/// on the same values and move along the same path of `A`.
fn zip_walks(s: &[Vertex], t: &[Vertex]) -> Option<Vec<(usize, usize)>> {
    let (ls, lt) = (s.len(), t.len());
    let mut out = vec![(0, 0)];
    let (mut i, mut j) = (0, 0);
    if s[0] != t[0] {
        return None;
    }
    while i + 1 < ls || j + 1 < lt {
        if i + 1 < ls && j + 1 < lt && s[i + 1] == t[j + 1] {
            i += 1;
            j += 1;
        } else if i + 1 < ls && s[i + 1] == t[j] {
            i += 1;
        } else if j + 1 < lt && t[j + 1] == s[i] {
            j += 1;
        } else {
            return None;
        }
        out.push((i, j));
    }
    Some(out)
}

/// Amalgamation for order- and end-preserving maps through uniform fans: both
/// domains become uniform fans of a common branch length, and each pair of
/// fan branches ending over the same end vertex of `A` contributes one zipped
/// path to a wedge at the root.
pub fn end_preserving_amalgamate(f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
    check_common_codomain(f, g)?;
    let (rb, rc) = require_rooted(f, g)?;
    let admissible = Constraints {
        order: true,
        end: true,
        ..Constraints::NONE
    };
    require(
        passes_all(f, &admissible) && passes_all(g, &admissible),
        "end-preserving amalgamation needs order- and end-preserving epimorphisms of rooted trees",
    )?;
    let tb = RootedTree::new(f.dom_arc(), rb)?;
    let tc = RootedTree::new(g.dom_arc(), rc)?;
    let (fan_b, to_b) = tree_to_uniform_fan(&tb);
    let (fan_c, to_c) = tree_to_uniform_fan(&tc);
    let len = branches(&fan_b)[0].len().max(branches(&fan_c)[0].len());
    let (fan_b2, sb) = stretch_fan(&fan_b, len)?;
    let (fan_c2, sc) = stretch_fan(&fan_c, len)?;
    let pb = compose(&sb, &to_b)?;
    let pc = compose(&sc, &to_c)?;
    let over_a_b = compose(&pb, f)?;
    let over_a_c = compose(&pc, g)?;
    let bb = branches(&fan_b2);
    let bc = branches(&fan_c2);

    let mut edges = Vec::new();
    let mut alpha = vec![rb];
    let mut beta = vec![rc];
    for (i, x) in bb.iter().enumerate() {
        let s: Vec<Vertex> = x.verts.iter().map(|&v| over_a_b.apply(v)).collect();
        let mut paired = false;
        for y in bc.iter() {
            let t: Vec<Vertex> = y.verts.iter().map(|&v| over_a_c.apply(v)).collect();
            if s.last() != t.last() {
                continue;
            }
            let zipped = zip_walks(&s, &t)
                .ok_or_else(|| Error::ConstructionFailed(format!("branch {i} does not zip with its partner")))?;
            let mut prev = 0;
            for &(k1, k2) in &zipped[1..] {
                let v = alpha.len();
                alpha.push(pb.apply(x.verts[k1]));
                beta.push(pc.apply(y.verts[k2]));
                edges.push((prev, v));
                prev = v;
            }
            paired = true;
        }
        if !paired {
            return Err(Error::ConstructionFailed(format!(
                "fan branch {i} has no partner ending over the same end vertex"
            )));
        }
    }
    let d = Arc::new(Graph::new(alpha.len(), edges)?);
    let f0 = GraphMap::new(Arc::clone(&d), f.dom_arc(), alpha)?.with_roots(0, rb)?;
    let g0 = GraphMap::new(d, g.dom_arc(), beta)?.with_roots(0, rc)?;
    Ok(AmalgamationResult::certify(f, g, f0, g0))
}

/// [`end_preserving_amalgamate`] followed by normalizing `D` to a uniform fan.
pub fn fan_amalgamate(f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
    let r = end_preserving_amalgamate(f, g)?;
    let t = RootedTree::new(Arc::clone(&r.d), r.root.expect("rooted"))?;
    let (_, to_d) = tree_to_uniform_fan(&t);
    let f0 = compose(&to_d, &r.f0)?;
    let g0 = compose(&to_d, &r.g0)?;
    Ok(AmalgamationResult::certify(f, g, f0, g0))
}

/// Exhaustive oracle: candidate trees `D` with up to `max_verts` vertices
/// (rooted at vertex 0 when order or end constraints are requested) and all
/// constraint-passing `f0`, each tried against some matching `g0`. Returns
/// the first certified square in candidate order.
pub fn search_amalgamate(
    f: &GraphMap,
    g: &GraphMap,
    c: &Constraints,
    max_verts: usize,
) -> Result<Option<AmalgamationResult>> {
    check_common_codomain(f, g)?;
    let roots = if c.needs_roots() {
        Some(require_rooted(f, g)?)
    } else {
        None
    };
    // Both legs are onto, so smaller candidates cannot work.
    let least = f.dom().n().max(g.dom().n()).max(1);
    let candidates: Vec<Graph> = (least..=max_verts)
        .flat_map(|n| {
            if roots.is_some() {
                enumerate_rooted_trees(n)
            } else {
                enumerate_trees(n)
            }
        })
        .collect();
    let opts = EnumOptions {
        max_dom: max_verts.max(1),
        ..EnumOptions::default()
    };
    let found = par::find_map_first(&candidates, |d| search_one(f, g, c, roots, d, &opts).transpose());
    found.transpose()
}

fn search_one(
    f: &GraphMap,
    g: &GraphMap,
    c: &Constraints,
    roots: Option<(Vertex, Vertex)>,
    d: &Graph,
    opts: &EnumOptions,
) -> Result<Option<AmalgamationResult>> {
    let d = Arc::new(d.clone());
    let f0s = enumerate_epis(Arc::clone(&d), f.dom_arc(), c, roots.map(|r| (0, r.0)), opts)?;
    for f0 in f0s {
        let allowed = (0..d.n())
            .map(|x| {
                let target = f.apply(f0.apply(x));
                g.dom().vertices().filter(|&y| g.apply(y) == target).collect()
            })
            .collect();
        let gopts = EnumOptions {
            limit: Some(1),
            allowed: Some(allowed),
            ..opts.clone()
        };
        let g0s = enumerate_epis(Arc::clone(&d), g.dom_arc(), c, roots.map(|r| (0, r.1)), &gopts)?;
        if let Some(g0) = g0s.into_iter().next() {
            let res = AmalgamationResult::certify(f, g, f0, g0);
            if res.passes(c) {
                return Ok(Some(res));
            }
        }
    }
    Ok(None)
}

/// Named amalgamation strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Pullback,
    Component,
    Tree,
    Monotone,
    MonotoneRooted,
    Confluent,
    EndPreserving,
    Fan,
    Search,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Pullback => "pullback",
            Strategy::Component => "component",
            Strategy::Tree => "tree",
            Strategy::Monotone => "monotone",
            Strategy::MonotoneRooted => "monotone-rooted",
            Strategy::Confluent => "confluent",
            Strategy::EndPreserving => "endpreserving",
            Strategy::Fan => "fan",
            Strategy::Search => "search",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pullback" => Strategy::Pullback,
            "component" => Strategy::Component,
            "tree" => Strategy::Tree,
            "monotone" => Strategy::Monotone,
            "monotone-rooted" => Strategy::MonotoneRooted,
            "confluent" => Strategy::Confluent,
            "endpreserving" | "end-preserving" => Strategy::EndPreserving,
            "fan" => Strategy::Fan,
            "search" => Strategy::Search,
            other => return Err(Error::InvalidInput(format!("unknown strategy `{other}`"))),
        })
    }
}

/// Runs a constructive strategy. `Search` uses `search` constraints and cap.
pub fn amalgamate(
    strategy: Strategy,
    f: &GraphMap,
    g: &GraphMap,
    search: Option<(&Constraints, usize)>,
) -> Result<AmalgamationResult> {
    match strategy {
        Strategy::Pullback => pullback_amalgamate(f, g),
        Strategy::Component => component_amalgamate(f, g),
        Strategy::Tree => tree_amalgamate(f, g),
        Strategy::Monotone => monotone_amalgamate(f, g),
        Strategy::MonotoneRooted => monotone_amalgamate_rooted(f, g),
        Strategy::Confluent => confluent_amalgamate(f, g),
        Strategy::EndPreserving => end_preserving_amalgamate(f, g),
        Strategy::Fan => fan_amalgamate(f, g),
        Strategy::Search => {
            let (c, cap) = search.unwrap_or((&Constraints::NONE, 8));
            search_amalgamate(f, g, c, cap)?
                .ok_or_else(|| Error::ConstructionFailed(format!("no amalgamation up to {cap} vertices")))
        }
    }
}
