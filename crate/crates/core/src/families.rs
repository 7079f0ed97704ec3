//! The named families of trees and epimorphisms, their surgery moves and
//! desk-scale suites for the amalgamation property and the limit hypotheses.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::amalgamation::{amalgamate, AmalgamationResult, Strategy, SEARCH_FALLBACK_CAP};
use crate::canon::{enumerate_rooted_trees, enumerate_trees};
use crate::error::{Error, Result};
use crate::graph::{is_tree, Graph, Vertex};
use crate::morphisms::{compose, enumerate_epis, Constraints, EnumOptions, GraphMap};
use crate::par;
use crate::rooted::{is_uniform_fan, RootOrder, RootedTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FamilyName {
    TM,
    TM3,
    TC,
    TCE,
    TE,
    FE,
}

impl FamilyName {
    pub const ALL: [FamilyName; 6] = [
        FamilyName::TM,
        FamilyName::TM3,
        FamilyName::TC,
        FamilyName::TCE,
        FamilyName::TE,
        FamilyName::FE,
    ];
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyName::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown family `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    SplitRamification,
    SubdivideEdge,
    AttachLeaf,
    AttachTriod,
    DoubleTree,
    StretchLeaf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilySpec {
    pub name: FamilyName,
    pub rooted: bool,
    pub constraints: Constraints,
    pub amalgamator: Strategy,
    /// Tried in order when the amalgamator's result is not certified.
    pub fallbacks: Vec<Strategy>,
    pub surgery_moves: Vec<Move>,
}

impl FamilySpec {
    pub fn get(name: FamilyName) -> Self {
        let c = |monotone, confluent, order, end| Constraints {
            monotone,
            confluent,
            light: false,
            order,
            end,
        };
        use Move::*;
        let (rooted, constraints, amalgamator, surgery_moves) = match name {
            FamilyName::TM => (
                false,
                c(true, false, false, false),
                Strategy::Monotone,
                vec![SubdivideEdge, AttachLeaf, AttachTriod, SplitRamification],
            ),
            FamilyName::TM3 => (
                false,
                c(true, false, false, false),
                Strategy::Monotone,
                vec![SplitRamification, SubdivideEdge],
            ),
            FamilyName::TC => (
                true,
                c(false, true, true, false),
                Strategy::Confluent,
                vec![SubdivideEdge, AttachLeaf, DoubleTree, StretchLeaf],
            ),
            FamilyName::TCE => (
                true,
                c(false, true, true, true),
                Strategy::Tree,
                vec![SubdivideEdge, StretchLeaf, DoubleTree],
            ),
            FamilyName::TE => (
                true,
                c(false, false, true, true),
                Strategy::EndPreserving,
                vec![SubdivideEdge, StretchLeaf, DoubleTree],
            ),
            FamilyName::FE => (true, c(false, false, true, true), Strategy::Fan, vec![DoubleTree]),
        };
        let fallbacks = match name {
            FamilyName::TC => vec![Strategy::Tree, Strategy::Search],
            FamilyName::TCE => vec![Strategy::Confluent, Strategy::Search],
            _ => Vec::new(),
        };
        FamilySpec {
            name,
            rooted,
            constraints,
            amalgamator,
            fallbacks,
            surgery_moves,
        }
    }

    /// Structural membership. Rooted families need a root.
    pub fn member(&self, t: &Graph, root: Option<Vertex>) -> bool {
        if !is_tree(t) || self.rooted != root.is_some() {
            return false;
        }
        match self.name {
            FamilyName::TM3 => is_tm3(t),
            FamilyName::FE => RootedTree::new(t.clone(), root.expect("rooted"))
                .map(|rt| is_uniform_fan(&rt))
                .unwrap_or(false),
            _ => true,
        }
    }

    /// Representatives of the family's trees with exactly `n` vertices;
    /// rooted families are rooted at vertex 0.
    pub fn trees(&self, n: usize) -> Vec<Graph> {
        let all = if self.rooted {
            enumerate_rooted_trees(n)
        } else {
            enumerate_trees(n)
        };
        let root = self.rooted.then_some(0);
        all.into_iter().filter(|t| self.member(t, root)).collect()
    }

    pub fn trees_up_to(&self, n: usize) -> Vec<Graph> {
        (1..=n).flat_map(|k| self.trees(k)).collect()
    }

    /// All family morphisms `dom -> cod` (roots at 0 for rooted families).
    pub fn maps(&self, dom: &Arc<Graph>, cod: &Arc<Graph>) -> Result<Vec<GraphMap>> {
        let roots = self.rooted.then_some((0, 0));
        enumerate_epis(
            Arc::clone(dom),
            Arc::clone(cod),
            &self.constraints,
            roots,
            &EnumOptions::default(),
        )
    }

    pub fn map_in_family(&self, m: &GraphMap) -> bool {
        let roots = m.roots();
        self.member(m.dom(), roots.map(|r| r.0))
            && self.member(m.cod(), roots.map(|r| r.1))
            && m.satisfies(&self.constraints)
    }

    /// The family's amalgamation. The registered fallbacks run only when the
    /// amalgamator errors or returns an uncertified square; TM3 outputs are
    /// normalized by splitting ramification vertices.
    pub fn amalgamate(&self, f: &GraphMap, g: &GraphMap) -> Result<AmalgamationResult> {
        self.amalgamate_within(f, g, usize::MAX)
            .map(|r| r.expect("no size bound"))
    }

    /// Like [`FamilySpec::amalgamate`], but a certified result with more than
    /// `max_vertices` vertices moves on to the next strategy. `Ok(None)` means
    /// every certified result was too large.
    pub fn amalgamate_within(
        &self,
        f: &GraphMap,
        g: &GraphMap,
        max_vertices: usize,
    ) -> Result<Option<AmalgamationResult>> {
        let search = Some((&self.constraints, SEARCH_FALLBACK_CAP));
        let mut first = None;
        let mut too_large = false;
        for strategy in std::iter::once(self.amalgamator).chain(self.fallbacks.iter().copied()) {
            let r = amalgamate(strategy, f, g, search).and_then(|r| self.normalize(f, g, r));
            match r {
                Ok(res) if self.accepts(&res) && res.d.n() <= max_vertices => return Ok(Some(res)),
                Ok(res) if self.accepts(&res) => too_large = true,
                other => {
                    first.get_or_insert(other);
                }
            }
        }
        if too_large {
            return Ok(None);
        }
        first.expect("at least the amalgamator ran").map(Some)
    }

    fn normalize(&self, f: &GraphMap, g: &GraphMap, r: AmalgamationResult) -> Result<AmalgamationResult> {
        if self.name != FamilyName::TM3 {
            return Ok(r);
        }
        let (_, split) = split_ramification(&r.d)?;
        let f0 = compose(&split, &r.f0)?;
        let g0 = compose(&split, &r.g0)?;
        Ok(AmalgamationResult::certify(f, g, f0, g0))
    }

    /// Certified result in the family: tree output, family maps, commuting square.
    pub fn accepts(&self, r: &AmalgamationResult) -> bool {
        r.passes(&self.constraints)
            && self.member(&r.d, r.root.filter(|_| self.rooted))
            && (!self.rooted || r.root.is_some())
    }
}

/// Orders at most three and no two adjacent vertices of order three.
pub fn is_tm3(t: &Graph) -> bool {
    is_tree(t)
        && t.vertices().all(|v| t.order(v) <= 3)
        && t.edges().iter().all(|&(u, v)| !(t.order(u) == 3 && t.order(v) == 3))
}

/// Replaces each vertex of order `k >= 4` by an alternating path of `k - 2`
/// order-three vertices and order-two spacers, then subdivides every edge
/// joining two order-three vertices. Returns the new tree and the monotone
/// collapse onto `t`. The original index is reused for the first vertex of
/// each cluster; new vertices are appended.
pub fn split_ramification(t: &Graph) -> Result<(Graph, GraphMap)> {
    if !is_tree(t) {
        return Err(Error::NotATree);
    }
    let mut assign: Vec<Vertex> = t.vertices().collect();
    let mut edges = Vec::new();
    // attach[v][i] = cluster vertex receiving the i-th neighbor of v.
    let mut attach: Vec<Vec<Vertex>> = Vec::with_capacity(t.n());
    for v in t.vertices() {
        let k = t.order(v);
        if k < 4 {
            attach.push(vec![v; k]);
            continue;
        }
        let mut hubs = vec![v];
        let mut prev = v;
        for _ in 1..k - 2 {
            let spacer = assign.len();
            assign.push(v);
            let hub = assign.len();
            assign.push(v);
            edges.push((prev, spacer));
            edges.push((spacer, hub));
            hubs.push(hub);
            prev = hub;
        }
        let mut slots = vec![hubs[0], hubs[0]];
        slots.extend(hubs[1..hubs.len() - 1].iter().copied());
        slots.extend([hubs[hubs.len() - 1]; 2]);
        attach.push(slots);
    }
    for &(u, v) in t.edges() {
        let iu = t.neighbors(u).binary_search(&v).expect("adjacent");
        let iv = t.neighbors(v).binary_search(&u).expect("adjacent");
        edges.push((attach[u][iu], attach[v][iv]));
    }
    let h = Graph::new(assign.len(), edges.clone())?;
    let mut final_edges = Vec::new();
    for &(u, v) in h.edges() {
        if h.order(u) == 3 && h.order(v) == 3 {
            let mid = assign.len();
            assign.push(assign[u]);
            final_edges.push((u, mid));
            final_edges.push((mid, v));
        } else {
            final_edges.push((u, v));
        }
    }
    let h = Graph::new(assign.len(), final_edges)?;
    let map = GraphMap::new(h.clone(), t.clone(), assign)?;
    Ok((h, map))
}

fn carry_roots(m: GraphMap, root: Option<Vertex>) -> Result<GraphMap> {
    match root {
        Some(r) => m.with_roots(r, r),
        None => Ok(m),
    }
}

fn check_vertex(t: &Graph, v: Vertex) -> Result<()> {
    if v >= t.n() {
        return Err(Error::InvalidInput(format!("vertex {v} out of range")));
    }
    Ok(())
}

/// Replaces the edge `a - b` by `a - a' - b' - b` with `a' = n`, `b' = n + 1`.
pub fn subdivide_edge(t: &Graph, a: Vertex, b: Vertex, root: Option<Vertex>) -> Result<(Graph, GraphMap)> {
    if a == b || a >= t.n() || b >= t.n() || !t.has_edge(a, b) {
        return Err(Error::InvalidInput(format!("({a},{b}) is not an edge")));
    }
    let n = t.n();
    let mut edges: Vec<_> = t
        .edges()
        .iter()
        .copied()
        .filter(|&e| e != (a.min(b), a.max(b)))
        .collect();
    edges.extend([(a, n), (n, n + 1), (n + 1, b)]);
    let h = Graph::new(n + 2, edges)?;
    let mut assign: Vec<Vertex> = t.vertices().collect();
    assign.extend([a, b]);
    let m = carry_roots(GraphMap::new(h.clone(), t.clone(), assign)?, root)?;
    Ok((h, m))
}

/// New leaf `n` at `v`, collapsed onto `v`.
pub fn attach_leaf(t: &Graph, v: Vertex, root: Option<Vertex>) -> Result<(Graph, GraphMap)> {
    check_vertex(t, v)?;
    let n = t.n();
    let mut edges = t.edges().to_vec();
    edges.push((v, n));
    let h = Graph::new(n + 1, edges)?;
    let mut assign: Vec<Vertex> = t.vertices().collect();
    assign.push(v);
    let m = carry_roots(GraphMap::new(h.clone(), t.clone(), assign)?, root)?;
    Ok((h, m))
}

/// New triod `v - b`, `b - c`, `b - d` (`b, c, d = n, n+1, n+2`), collapsed onto `v`.
pub fn attach_triod(t: &Graph, v: Vertex, root: Option<Vertex>) -> Result<(Graph, GraphMap)> {
    check_vertex(t, v)?;
    let n = t.n();
    let mut edges = t.edges().to_vec();
    edges.extend([(v, n), (n, n + 1), (n, n + 2)]);
    let h = Graph::new(n + 3, edges)?;
    let mut assign: Vec<Vertex> = t.vertices().collect();
    assign.extend([v; 3]);
    let m = carry_roots(GraphMap::new(h.clone(), t.clone(), assign)?, root)?;
    Ok((h, m))
}

/// One-point union of two copies of `t` at the root. The second copy's
/// non-root vertices follow the originals in index order.
pub fn double_tree(t: &Graph, root: Vertex) -> Result<(Graph, GraphMap)> {
    check_vertex(t, root)?;
    let n = t.n();
    let copy_of = |v: Vertex| -> Vertex {
        if v == root {
            root
        } else {
            n + v - usize::from(v > root)
        }
    };
    let mut edges = t.edges().to_vec();
    edges.extend(t.edges().iter().map(|&(u, v)| (copy_of(u), copy_of(v))));
    let h = Graph::new(2 * n - 1, edges)?;
    let mut assign: Vec<Vertex> = t.vertices().collect();
    assign.extend(t.vertices().filter(|&v| v != root));
    let m = GraphMap::new(h.clone(), t.clone(), assign)?.with_roots(root, root)?;
    Ok((h, m))
}

/// For a leaf edge `a - e` with `e` a non-root end vertex, hangs a new vertex
/// `n` below `e` and maps it to `e`, so that `e < n` both lie over `e`.
pub fn stretch_leaf(t: &Graph, root: Vertex, a: Vertex, e: Vertex) -> Result<(Graph, GraphMap)> {
    let order = RootOrder::new(t, root)?;
    if e >= t.n() || e == root || !order.children(e).is_empty() || order.parent(e) != Some(a) {
        return Err(Error::InvalidInput(format!(
            "({a},{e}) is not a leaf edge below the root"
        )));
    }
    let (h, m) = attach_leaf(t, e, Some(root))?;
    Ok((h, m))
}

/// No `p, q, r` over distinct `a, b, c` with both `p - q` and `q - r` edges.
pub fn separates_triple(m: &GraphMap, a: Vertex, b: Vertex, c: Vertex) -> bool {
    let h = m.dom();
    let over = |y: Vertex| -> Vec<Vertex> { h.vertices().filter(|&x| m.apply(x) == y).collect() };
    let (ps, qs, rs) = (over(a), over(b), over(c));
    !qs.iter()
        .any(|&q| ps.iter().any(|&p| h.has_edge(p, q)) && rs.iter().any(|&r| h.has_edge(q, r)))
}

/// Every `p` over `a` lies below two distinct vertices `q < r` over `e`.
pub fn duplicates_end(m: &GraphMap, root: Vertex, a: Vertex, e: Vertex) -> bool {
    let Ok(order) = RootOrder::new(m.dom(), root) else {
        return false;
    };
    let h = m.dom();
    let over_e: Vec<Vertex> = h.vertices().filter(|&x| m.apply(x) == e).collect();
    h.vertices().filter(|&p| m.apply(p) == a).all(|p| {
        over_e
            .iter()
            .any(|&q| order.leq(p, q) && over_e.iter().any(|&r| r != q && order.leq(q, r)))
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub detail: String,
    #[serde(serialize_with = "crate::io::serialize_maps")]
    pub maps: Vec<GraphMap>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub family: FamilyName,
    pub suite: String,
    pub cap: usize,
    pub instances: usize,
    pub failures: usize,
    pub passed: bool,
    pub counterexamples: Vec<Counterexample>,
}

const KEPT_COUNTEREXAMPLES: usize = 5;

fn report(spec: &FamilySpec, suite: &str, cap: usize, outcomes: Vec<Option<Counterexample>>) -> SuiteReport {
    let instances = outcomes.len();
    let fails: Vec<Counterexample> = outcomes.into_iter().flatten().collect();
    SuiteReport {
        family: spec.name,
        suite: suite.into(),
        cap,
        instances,
        failures: fails.len(),
        passed: fails.is_empty(),
        counterexamples: fails.into_iter().take(KEPT_COUNTEREXAMPLES).collect(),
    }
}

/// Every pair of family maps from trees with at most `cap` vertices onto a
/// common family tree with at most `cap` vertices is amalgamated by the
/// family's strategy and must certify inside the family.
pub fn amalgamation_suite(spec: &FamilySpec, cap: usize) -> Result<SuiteReport> {
    let trees: Vec<Arc<Graph>> = spec.trees_up_to(cap).into_iter().map(Arc::new).collect();
    let mut pairs = Vec::new();
    for a in &trees {
        let mut legs = Vec::new();
        for b in &trees {
            legs.extend(spec.maps(b, a)?);
        }
        let legs = Arc::new(legs);
        for i in 0..legs.len() {
            for j in 0..legs.len() {
                pairs.push((Arc::clone(&legs), i, j));
            }
        }
    }
    let outcomes = par::map(&pairs, |(legs, i, j)| {
        let (f, g) = (&legs[*i], &legs[*j]);
        let fail = |detail: String| {
            Some(Counterexample {
                detail,
                maps: vec![f.clone(), g.clone()],
            })
        };
        match spec.amalgamate(f, g) {
            Ok(r) if spec.accepts(&r) => None,
            Ok(r) => fail(format!("uncertified result: {:?}", r.certificate)),
            Err(e) => fail(e.to_string()),
        }
    });
    Ok(report(spec, "amalgamation", cap, outcomes))
}

fn supported(spec: &FamilySpec) -> Result<()> {
    match spec.name {
        FamilyName::TM | FamilyName::TC | FamilyName::TCE | FamilyName::TE => Ok(()),
        other => Err(Error::Precondition(format!(
            "hypothesis suites are defined for TM, TC, TCE and TE, not {other}"
        ))),
    }
}

/// For every family tree up to `cap` and every path `a - b - c` of distinct
/// vertices, subdividing `a - b` gives a family map separating the triple.
pub fn hypothesis_transitive(spec: &FamilySpec, cap: usize) -> Result<SuiteReport> {
    supported(spec)?;
    let trees = spec.trees_up_to(cap);
    let outcomes = par::map(&trees, |t| {
        let mut bad = None;
        let root = spec.rooted.then_some(0);
        {
            for b in t.vertices() {
                for &a in t.neighbors(b) {
                    for &c in t.neighbors(b) {
                        if a == c {
                            continue;
                        }
                        let ok = subdivide_edge(t, a, b, root)
                            .map(|(_, m)| spec.map_in_family(&m) && separates_triple(&m, a, b, c))
                            .unwrap_or(false);
                        if !ok && bad.is_none() {
                            bad = Some(Counterexample {
                                detail: format!("triple ({a},{b},{c}) in a {}-vertex tree", t.n()),
                                maps: vec![],
                            });
                        }
                    }
                }
            }
        }
        bad
    });
    Ok(report(spec, "transitive", cap, outcomes))
}

/// For every family tree up to `cap` (every rooting, for unrooted families)
/// and every leaf edge `a - e` below the root, `stretch_leaf` gives a family
/// map under which each vertex over `a` sits below two vertices over `e`.
pub fn hypothesis_no_isolated_ends(spec: &FamilySpec, cap: usize) -> Result<SuiteReport> {
    supported(spec)?;
    let trees = spec.trees_up_to(cap);
    let outcomes = par::map(&trees, |t| {
        let roots: Vec<Vertex> = if spec.rooted { vec![0] } else { t.vertices().collect() };
        for root in roots {
            let Ok(order) = RootOrder::new(t, root) else {
                return Some(Counterexample {
                    detail: "not a tree".into(),
                    maps: vec![],
                });
            };
            for e in order.maximal().iter().filter(|&e| e != root) {
                let a = order.parent(e).expect("non-root");
                let ok = stretch_leaf(t, root, a, e)
                    .map(|(_, m)| {
                        let m = if spec.rooted { m } else { m.without_roots() };
                        spec.map_in_family(&m) && duplicates_end(&m, root, a, e)
                    })
                    .unwrap_or(false);
                if !ok {
                    return Some(Counterexample {
                        detail: format!("leaf edge ({a},{e}) with root {root} in a {}-vertex tree", t.n()),
                        maps: vec![],
                    });
                }
            }
        }
        None
    });
    Ok(report(spec, "ends", cap, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        let tm = FamilySpec::get(FamilyName::TM);
        assert!(tm.member(&Graph::star(3), None));
        assert!(!FamilySpec::get(FamilyName::TM3).member(&Graph::star(4), None));
        assert!(FamilySpec::get(FamilyName::FE).member(&Graph::star(3), Some(0)));
    }

    #[test]
    fn split_small_stars() {
        for (leaves, hubs) in [(4, 2), (5, 3)] {
            let (h, m) = split_ramification(&Graph::star(leaves)).unwrap();
            assert!(is_tm3(&h));
            assert_eq!(h.vertices().filter(|&v| h.order(v) == 3).count(), hubs);
            assert!(m.satisfies(&Constraints::monotone()));
        }
        let (h, m) = split_ramification(&Graph::star(3)).unwrap();
        assert_eq!(h, Graph::star(3));
        assert_eq!(m.assign(), &[0, 1, 2, 3]);
    }

    #[test]
    fn subdivide_single_edge() {
        let (h, m) = subdivide_edge(&Graph::path(2), 0, 1, None).unwrap();
        assert!(crate::graph::is_arc(&h).is_some());
        assert_eq!(h.n(), 4);
        assert!(m.satisfies(&Constraints::monotone()));
    }

    #[test]
    fn double_an_edge() {
        let (h, m) = double_tree(&Graph::path(2), 0).unwrap();
        assert_eq!(h, Graph::star(2));
        assert_eq!(m.assign(), &[0, 1, 1]);
    }

    #[test]
    fn stretch_leaf_duplicates_end() {
        let t = Graph::path(3);
        let (_, m) = stretch_leaf(&t, 0, 1, 2).unwrap();
        assert!(duplicates_end(&m, 0, 1, 2));
        assert!(stretch_leaf(&t, 0, 0, 1).is_err());
    }
}
