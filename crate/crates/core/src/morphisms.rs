//! Vertex maps between graphs, the map-class checkers, composition and
//! exhaustive epimorphism enumeration.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{components, end_vertices, Graph, Vertex, VertexSet};
use crate::par;
use crate::rooted::RootOrder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Homomorphism,
    Epimorphism,
    Monotone,
    Confluent,
    Light,
    OrderPreserving,
    EndPreserving,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Homomorphism,
        Property::Epimorphism,
        Property::Monotone,
        Property::Confluent,
        Property::Light,
        Property::OrderPreserving,
        Property::EndPreserving,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Homomorphism => "homomorphism",
            Property::Epimorphism => "epimorphism",
            Property::Monotone => "monotone",
            Property::Confluent => "confluent",
            Property::Light => "light",
            Property::OrderPreserving => "order-preserving",
            Property::EndPreserving => "end-preserving",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "homomorphism" | "hom" => Property::Homomorphism,
            "epimorphism" | "epi" => Property::Epimorphism,
            "monotone" => Property::Monotone,
            "confluent" => Property::Confluent,
            "light" => Property::Light,
            "order-preserving" | "order" => Property::OrderPreserving,
            "end-preserving" | "end" => Property::EndPreserving,
            other => return Err(Error::InvalidInput(format!("unknown property `{other}`"))),
        })
    }
}

/// Map classes requested on top of being an epimorphism.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Constraints {
    pub monotone: bool,
    pub confluent: bool,
    pub light: bool,
    pub order: bool,
    pub end: bool,
}

impl Constraints {
    pub const NONE: Constraints = Constraints {
        monotone: false,
        confluent: false,
        light: false,
        order: false,
        end: false,
    };

    pub fn monotone() -> Self {
        Constraints {
            monotone: true,
            ..Self::NONE
        }
    }

    pub fn confluent() -> Self {
        Constraints {
            confluent: true,
            ..Self::NONE
        }
    }

    pub fn needs_roots(&self) -> bool {
        self.order || self.end
    }

    pub fn properties(&self) -> Vec<Property> {
        let mut out = vec![Property::Epimorphism];
        let flags = [
            (self.monotone, Property::Monotone),
            (self.confluent, Property::Confluent),
            (self.light, Property::Light),
            (self.order, Property::OrderPreserving),
            (self.end, Property::EndPreserving),
        ];
        out.extend(flags.iter().filter(|f| f.0).map(|f| f.1));
        out
    }

    pub fn parse_list(s: &str) -> Result<Self> {
        let mut c = Self::NONE;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.parse::<Property>()? {
                Property::Homomorphism | Property::Epimorphism => {}
                Property::Monotone => c.monotone = true,
                Property::Confluent => c.confluent = true,
                Property::Light => c.light = true,
                Property::OrderPreserving => c.order = true,
                Property::EndPreserving => c.end = true,
            }
        }
        Ok(c)
    }
}

/// Counterexample data attached to a negative verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// Domain edge whose endpoints land on non-adjacent vertices.
    EdgeNotPreserved {
        u: Vertex,
        v: Vertex,
    },
    VertexMissed {
        y: Vertex,
    },
    /// Codomain edge not covered by any domain edge.
    EdgeMissed {
        x: Vertex,
        y: Vertex,
    },
    /// One component of a disconnected fiber.
    DisconnectedFiber {
        y: Vertex,
        part: Vec<Vertex>,
    },
    EdgeInFiber {
        u: Vertex,
        v: Vertex,
    },
    /// Component of the preimage of edge `(x, y)` without an edge onto it.
    UncoveredComponent {
        x: Vertex,
        y: Vertex,
        component: Vec<Vertex>,
    },
    RootNotPreserved {
        root_dom: Vertex,
        root_cod: Vertex,
    },
    /// `x <= y` in the domain but `f(x) <= f(y)` fails.
    OrderViolated {
        root_dom: Vertex,
        root_cod: Vertex,
        x: Vertex,
        y: Vertex,
    },
    EndNotPreserved {
        x: Vertex,
        image: Vertex,
        roots: Option<(Vertex, Vertex)>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub verdict: bool,
    pub witness: Option<Witness>,
}

impl PropertyReport {
    fn pass(property: Property) -> Self {
        PropertyReport {
            property,
            verdict: true,
            witness: None,
        }
    }

    fn fail(property: Property, w: Witness) -> Self {
        PropertyReport {
            property,
            verdict: false,
            witness: Some(w),
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Cache {
    epi: OnceLock<bool>,
    monotone: OnceLock<bool>,
    confluent: OnceLock<bool>,
    light: OnceLock<bool>,
    order: OnceLock<bool>,
    end: OnceLock<bool>,
}

/// Vertex assignment `dom -> cod`, optionally carrying a root pair.
#[derive(Clone, Debug)]
pub struct GraphMap {
    dom: Arc<Graph>,
    cod: Arc<Graph>,
    assign: Vec<Vertex>,
    roots: Option<(Vertex, Vertex)>,
    cache: Cache,
}

impl PartialEq for GraphMap {
    fn eq(&self, other: &Self) -> bool {
        self.assign == other.assign
            && self.roots == other.roots
            && same_graph(&self.dom, &other.dom)
            && same_graph(&self.cod, &other.cod)
    }
}

impl Eq for GraphMap {}

/// Equal vertex count and edge set; labels ignored.
pub fn same_graph(a: &Graph, b: &Graph) -> bool {
    a.n() == b.n() && a.edges() == b.edges()
}

impl GraphMap {
    pub fn new(dom: impl Into<Arc<Graph>>, cod: impl Into<Arc<Graph>>, assign: Vec<Vertex>) -> Result<Self> {
        let (dom, cod) = (dom.into(), cod.into());
        if assign.len() != dom.n() {
            return Err(Error::InvalidInput(format!(
                "assignment has {} entries for {} domain vertices",
                assign.len(),
                dom.n()
            )));
        }
        if let Some((i, &v)) = assign.iter().enumerate().find(|(_, &v)| v >= cod.n()) {
            return Err(Error::InvalidInput(format!(
                "assign[{i}] = {v} is outside the codomain (n = {})",
                cod.n()
            )));
        }
        Ok(GraphMap {
            dom,
            cod,
            assign,
            roots: None,
            cache: Cache::default(),
        })
    }

    pub fn with_roots(mut self, root_dom: Vertex, root_cod: Vertex) -> Result<Self> {
        if root_dom >= self.dom.n() || root_cod >= self.cod.n() {
            return Err(Error::InvalidInput(format!(
                "roots ({root_dom}, {root_cod}) out of range"
            )));
        }
        self.roots = Some((root_dom, root_cod));
        self.cache = Cache::default();
        Ok(self)
    }

    pub fn without_roots(mut self) -> Self {
        self.roots = None;
        self.cache = Cache::default();
        self
    }

    pub fn identity(g: impl Into<Arc<Graph>>) -> Self {
        let g = g.into();
        let assign = g.vertices().collect();
        GraphMap::new(Arc::clone(&g), g, assign).expect("identity")
    }

    pub fn constant(dom: impl Into<Arc<Graph>>, cod: impl Into<Arc<Graph>>, v: Vertex) -> Result<Self> {
        let dom = dom.into();
        let n = dom.n();
        GraphMap::new(dom, cod, vec![v; n])
    }

    pub fn dom(&self) -> &Graph {
        &self.dom
    }

    pub fn cod(&self) -> &Graph {
        &self.cod
    }

    pub fn dom_arc(&self) -> Arc<Graph> {
        Arc::clone(&self.dom)
    }

    pub fn cod_arc(&self) -> Arc<Graph> {
        Arc::clone(&self.cod)
    }

    pub fn assign(&self) -> &[Vertex] {
        &self.assign
    }

    pub fn apply(&self, v: Vertex) -> Vertex {
        self.assign[v]
    }

    pub fn roots(&self) -> Option<(Vertex, Vertex)> {
        self.roots
    }

    pub fn fiber(&self, y: Vertex) -> VertexSet {
        VertexSet::from_vertices(self.dom.n(), self.dom.vertices().filter(|&x| self.assign[x] == y)).expect("in range")
    }

    /// Runs the checker for `p`, using the carried roots for order and end
    /// preservation.
    pub fn check(&self, p: Property) -> Result<PropertyReport> {
        match p {
            Property::Homomorphism => Ok(is_homomorphism(self)),
            Property::Epimorphism => is_epimorphism(self),
            Property::Monotone => is_monotone(self),
            Property::Confluent => is_confluent(self),
            Property::Light => is_light(self),
            Property::OrderPreserving => {
                let (rd, rc) = self.roots.ok_or(Error::NotRooted)?;
                is_order_preserving(self, rd, rc)
            }
            Property::EndPreserving => is_end_preserving(self, self.roots),
        }
    }

    /// Cached verdict; the cache is a convenience and never trusted by the
    /// constructions, which call the checkers directly.
    pub fn holds(&self, p: Property) -> Result<bool> {
        let slot = match p {
            Property::Homomorphism => return Ok(is_homomorphism(self).verdict),
            Property::Epimorphism => &self.cache.epi,
            Property::Monotone => &self.cache.monotone,
            Property::Confluent => &self.cache.confluent,
            Property::Light => &self.cache.light,
            Property::OrderPreserving => &self.cache.order,
            Property::EndPreserving => &self.cache.end,
        };
        if let Some(&v) = slot.get() {
            return Ok(v);
        }
        let v = self.check(p)?.verdict;
        let _ = slot.set(v);
        Ok(v)
    }

    /// Epimorphism plus every requested class. Non-epimorphisms and maps
    /// lacking roots for order/end constraints give `false`.
    pub fn satisfies(&self, c: &Constraints) -> bool {
        if c.needs_roots() && self.roots.is_none() {
            return false;
        }
        c.properties()
            .into_iter()
            .all(|p| self.check(p).map(|r| r.verdict).unwrap_or(false))
    }
}

pub fn is_homomorphism(f: &GraphMap) -> PropertyReport {
    let a = &f.assign;
    match f.dom.edges().iter().find(|&&(u, v)| !f.cod.has_edge(a[u], a[v])) {
        Some(&(u, v)) => PropertyReport::fail(Property::Homomorphism, Witness::EdgeNotPreserved { u, v }),
        None => PropertyReport::pass(Property::Homomorphism),
    }
}

pub fn is_epimorphism(f: &GraphMap) -> Result<PropertyReport> {
    if !is_homomorphism(f).verdict {
        return Err(Error::NotHomomorphism);
    }
    let mut hit = vec![false; f.cod.n()];
    for &y in &f.assign {
        hit[y] = true;
    }
    if let Some(y) = hit.iter().position(|h| !h) {
        return Ok(PropertyReport::fail(Property::Epimorphism, Witness::VertexMissed { y }));
    }
    let covered = covered_edges(f);
    if let Some(i) = covered.iter().position(|c| !c) {
        let (x, y) = f.cod.edges()[i];
        return Ok(PropertyReport::fail(
            Property::Epimorphism,
            Witness::EdgeMissed { x, y },
        ));
    }
    Ok(PropertyReport::pass(Property::Epimorphism))
}

fn covered_edges(f: &GraphMap) -> Vec<bool> {
    let cod_edges = f.cod.edges();
    let mut covered = vec![false; cod_edges.len()];
    for &(u, v) in f.dom.edges() {
        let (x, y) = (f.assign[u], f.assign[v]);
        if x != y {
            if let Ok(i) = cod_edges.binary_search(&(x.min(y), x.max(y))) {
                covered[i] = true;
            }
        }
    }
    covered
}

fn require_epi(f: &GraphMap) -> Result<()> {
    match is_epimorphism(f) {
        Ok(r) if r.verdict => Ok(()),
        Ok(_) | Err(Error::NotHomomorphism) => Err(Error::NotEpimorphism),
        Err(e) => Err(e),
    }
}

pub fn is_monotone(f: &GraphMap) -> Result<PropertyReport> {
    require_epi(f)?;
    for y in f.cod.vertices() {
        let parts = components(&f.dom, &f.fiber(y))?;
        if parts.count() > 1 {
            let part = parts.parts().swap_remove(0);
            return Ok(PropertyReport::fail(
                Property::Monotone,
                Witness::DisconnectedFiber { y, part },
            ));
        }
    }
    Ok(PropertyReport::pass(Property::Monotone))
}

/// Checks that every component of the preimage of every nondegenerate
/// codomain edge contains a domain edge mapped onto it.
pub fn is_confluent(f: &GraphMap) -> Result<PropertyReport> {
    require_epi(f)?;
    for &(x, y) in f.cod.edges() {
        let pre = VertexSet::from_vertices(
            f.dom.n(),
            f.dom.vertices().filter(|&v| f.assign[v] == x || f.assign[v] == y),
        )?;
        let parts = components(&f.dom, &pre)?;
        let mut covered = vec![false; parts.count()];
        for &(u, v) in f.dom.edges() {
            if f.assign[u] != f.assign[v] && pre.contains(u) && pre.contains(v) {
                covered[parts.component_of(u).expect("in preimage")] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            let component = parts.parts().swap_remove(i);
            return Ok(PropertyReport::fail(
                Property::Confluent,
                Witness::UncoveredComponent { x, y, component },
            ));
        }
    }
    Ok(PropertyReport::pass(Property::Confluent))
}

pub fn is_light(f: &GraphMap) -> Result<PropertyReport> {
    require_epi(f)?;
    match f.dom.edges().iter().find(|&&(u, v)| f.assign[u] == f.assign[v]) {
        Some(&(u, v)) => Ok(PropertyReport::fail(Property::Light, Witness::EdgeInFiber { u, v })),
        None => Ok(PropertyReport::pass(Property::Light)),
    }
}

/// Root-to-root and `x <= y => f(x) <= f(y)` under both root orders.
pub fn is_order_preserving(f: &GraphMap, root_dom: Vertex, root_cod: Vertex) -> Result<PropertyReport> {
    let od = RootOrder::new(&f.dom, root_dom)?;
    let oc = RootOrder::new(&f.cod, root_cod)?;
    Ok(order_report(f, &od, &oc))
}

fn order_report(f: &GraphMap, od: &RootOrder, oc: &RootOrder) -> PropertyReport {
    let (rd, rc) = (od.root(), oc.root());
    if f.assign[rd] != rc {
        return PropertyReport::fail(
            Property::OrderPreserving,
            Witness::RootNotPreserved {
                root_dom: rd,
                root_cod: rc,
            },
        );
    }
    for y in f.dom.vertices() {
        for x in f.dom.vertices() {
            if od.leq(x, y) && !oc.leq(f.assign[x], f.assign[y]) {
                return PropertyReport::fail(
                    Property::OrderPreserving,
                    Witness::OrderViolated {
                        root_dom: rd,
                        root_cod: rc,
                        x,
                        y,
                    },
                );
            }
        }
    }
    PropertyReport::pass(Property::OrderPreserving)
}

/// End vertices go to end vertices. With roots, ends are the maximal elements
/// of the root orders and the map must also preserve order; without roots,
/// ends are the vertices of order at most one.
pub fn is_end_preserving(f: &GraphMap, roots: Option<(Vertex, Vertex)>) -> Result<PropertyReport> {
    let (dom_ends, cod_ends) = match roots {
        Some((rd, rc)) => {
            let od = RootOrder::new(&f.dom, rd)?;
            let oc = RootOrder::new(&f.cod, rc)?;
            let order = order_report(f, &od, &oc);
            if !order.verdict {
                return Ok(PropertyReport {
                    property: Property::EndPreserving,
                    ..order
                });
            }
            (od.maximal(), oc.maximal())
        }
        None => (end_vertices(&f.dom), end_vertices(&f.cod)),
    };
    for x in dom_ends.iter() {
        let image = f.assign[x];
        if !cod_ends.contains(image) {
            return Ok(PropertyReport::fail(
                Property::EndPreserving,
                Witness::EndNotPreserved { x, image, roots },
            ));
        }
    }
    Ok(PropertyReport::pass(Property::EndPreserving))
}

/// Re-checks a witness against the map from scratch.
pub fn witness_holds(f: &GraphMap, w: &Witness) -> bool {
    let a = &f.assign;
    let (dom, cod) = (&*f.dom, &*f.cod);
    let in_dom = |v: Vertex| v < dom.n();
    match w {
        Witness::EdgeNotPreserved { u, v } => {
            in_dom(*u) && in_dom(*v) && dom.has_edge(*u, *v) && !cod.has_edge(a[*u], a[*v])
        }
        Witness::VertexMissed { y } => *y < cod.n() && !a.contains(y),
        Witness::EdgeMissed { x, y } => {
            x != y
                && *x < cod.n()
                && *y < cod.n()
                && cod.has_edge(*x, *y)
                && !dom
                    .edges()
                    .iter()
                    .any(|&(u, v)| (a[u], a[v]) == (*x, *y) || (a[u], a[v]) == (*y, *x))
        }
        Witness::DisconnectedFiber { y, part } => {
            let fiber = f.fiber(*y);
            let Ok(p) = VertexSet::from_vertices(dom.n(), part.iter().copied()) else {
                return false;
            };
            is_component_of(dom, &p, &fiber) && p.len() < fiber.len()
        }
        Witness::EdgeInFiber { u, v } => u != v && in_dom(*u) && in_dom(*v) && dom.has_edge(*u, *v) && a[*u] == a[*v],
        Witness::UncoveredComponent { x, y, component } => {
            if x == y || !cod.has_edge(*x, *y) {
                return false;
            }
            let pre: VertexSet = dom.vertices().filter(|&v| a[v] == *x || a[v] == *y).collect();
            let Ok(c) = VertexSet::from_vertices(dom.n(), component.iter().copied()) else {
                return false;
            };
            is_component_of(dom, &c, &pre)
                && !dom
                    .edges()
                    .iter()
                    .any(|&(u, v)| c.contains(u) && c.contains(v) && a[u] != a[v])
        }
        Witness::RootNotPreserved { root_dom, root_cod } => in_dom(*root_dom) && a[*root_dom] != *root_cod,
        Witness::OrderViolated {
            root_dom,
            root_cod,
            x,
            y,
        } => match (RootOrder::new(dom, *root_dom), RootOrder::new(cod, *root_cod)) {
            (Ok(od), Ok(oc)) => od.leq(*x, *y) && !oc.leq(a[*x], a[*y]),
            _ => false,
        },
        Witness::EndNotPreserved { x, image, roots } => {
            if !in_dom(*x) || a[*x] != *image {
                return false;
            }
            match roots {
                Some((rd, rc)) => match (RootOrder::new(dom, *rd), RootOrder::new(cod, *rc)) {
                    (Ok(od), Ok(oc)) => od.children(*x).is_empty() && !oc.children(*image).is_empty(),
                    _ => false,
                },
                None => dom.order(*x) <= 1 && cod.order(*image) > 1,
            }
        }
    }
}

/// `part` is a nonempty connected subset of `within` with no edge leaving it
/// inside `within`.
fn is_component_of(g: &Graph, part: &VertexSet, within: &VertexSet) -> bool {
    if part.is_empty() || !part.is_subset(within) {
        return false;
    }
    let connected = components(g, part).map(|c| c.count() == 1).unwrap_or(false);
    let closed = part
        .iter()
        .all(|u| g.neighbors(u).iter().all(|&w| !within.contains(w) || part.contains(w)));
    connected && closed
}

/// `g ∘ f`, defined when `f.cod` equals `g.dom`. Roots are kept when both
/// maps carry them and they agree on the middle graph.
pub fn compose(f: &GraphMap, g: &GraphMap) -> Result<GraphMap> {
    if !same_graph(&f.cod, &g.dom) {
        return Err(Error::MismatchedGraphs(
            "codomain of the first map differs from the domain of the second".into(),
        ));
    }
    let assign = f.assign.iter().map(|&v| g.assign[v]).collect();
    let h = GraphMap::new(f.dom_arc(), g.cod_arc(), assign)?;
    match (f.roots, g.roots) {
        (Some((a, b)), Some((c, d))) => {
            if b != c {
                return Err(Error::MismatchedGraphs(format!(
                    "root mismatch on the middle graph: {b} vs {c}"
                )));
            }
            h.with_roots(a, d)
        }
        _ => Ok(h),
    }
}

#[derive(Clone, Debug)]
pub struct EnumOptions {
    /// Largest domain accepted.
    pub max_dom: usize,
    /// Stop after this many maps.
    pub limit: Option<usize>,
    /// Search-tree node budget.
    pub node_budget: u64,
    /// Optional per-domain-vertex whitelist of codomain values.
    pub allowed: Option<Vec<Vec<Vertex>>>,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            max_dom: 10,
            limit: None,
            node_budget: 50_000_000,
            allowed: None,
        }
    }
}

struct Search<'a> {
    dom: &'a Graph,
    cod: &'a Graph,
    c: Constraints,
    od: Option<RootOrder>,
    oc: Option<RootOrder>,
    dom_end: Vec<bool>,
    cod_end: Vec<bool>,
    /// Distance from each domain vertex to the nearest end it can reach
    /// (below it, when rooted).
    dom_end_dist: Vec<usize>,
    /// Same for codomain vertices; an image must not be farther from its
    /// ends than the preimage is from its own.
    cod_end_dist: Vec<usize>,
    values: Vec<Vec<Vertex>>,
    nodes: &'a AtomicU64,
    budget: u64,
    prune: bool,
}

impl Search<'_> {
    fn consistent(&self, a: &[Vertex], v: Vertex, val: Vertex) -> bool {
        for &w in self.dom.neighbors(v) {
            if w < v {
                if !self.cod.has_edge(val, a[w]) {
                    return false;
                }
                if self.c.light && a[w] == val {
                    return false;
                }
            }
        }
        if self.c.end && (self.dom_end[v] && !self.cod_end[val] || self.cod_end_dist[val] > self.dom_end_dist[v]) {
            return false;
        }
        if let (Some(od), Some(oc)) = (&self.od, &self.oc) {
            for (u, &au) in a.iter().enumerate().take(v) {
                if od.leq(u, v) && !oc.leq(au, val) {
                    return false;
                }
                if od.leq(v, u) && !oc.leq(val, au) {
                    return false;
                }
            }
        }
        true
    }

    /// A fiber piece that can no longer grow while another vertex already
    /// shares its value means a disconnected fiber.
    fn monotone_dead(&self, a: &[Vertex], assigned: usize) -> bool {
        let mut seen = vec![false; assigned];
        for s in 0..assigned {
            if seen[s] {
                continue;
            }
            let val = a[s];
            let mut stack = vec![s];
            seen[s] = true;
            let mut size = 0;
            let mut open = false;
            while let Some(u) = stack.pop() {
                size += 1;
                for &w in self.dom.neighbors(u) {
                    if w >= assigned {
                        open = true;
                    } else if a[w] == val && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            if !open {
                let total = a[..assigned].iter().filter(|&&x| x == val).count();
                if total > size {
                    return true;
                }
            }
        }
        false
    }

    fn run(
        &self,
        a: &mut Vec<Vertex>,
        hits: &mut [usize],
        missing: usize,
        emit: &mut dyn FnMut(&[Vertex]) -> bool,
    ) -> Result<bool> {
        let n = self.dom.n();
        let v = a.len();
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Err(Error::BudgetExceeded(format!(
                "more than {} search nodes enumerating maps",
                self.budget
            )));
        }
        if v == n {
            return Ok(missing == 0 && emit(a));
        }
        for &val in &self.values[v] {
            if self.prune {
                if !self.consistent(a, v, val) {
                    continue;
                }
                let new_missing = missing - usize::from(hits[val] == 0);
                if new_missing > n - v - 1 {
                    continue;
                }
            }
            let newly = hits[val] == 0;
            hits[val] += 1;
            a.push(val);
            let dead = self.prune && self.c.monotone && self.monotone_dead(a, v + 1);
            let stop = if dead {
                false
            } else {
                self.run(a, hits, missing - usize::from(newly), emit)?
            };
            a.pop();
            hits[val] -= 1;
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Multi-source distances to the ends; with an order, only ends above a
/// vertex count, which is a bottom-up pass over depths.
fn end_distances(g: &Graph, ends: &[bool], order: Option<&RootOrder>) -> Vec<usize> {
    let n = g.n();
    let mut dist = vec![usize::MAX; n];
    match order {
        Some(o) => {
            let mut by_depth: Vec<Vertex> = g.vertices().collect();
            by_depth.sort_by_key(|&v| std::cmp::Reverse(o.depth(v)));
            for v in by_depth {
                dist[v] = if ends[v] {
                    0
                } else {
                    o.children(v)
                        .iter()
                        .map(|&c| dist[c].saturating_add(1))
                        .min()
                        .unwrap_or(usize::MAX)
                };
            }
        }
        None => {
            let mut queue: std::collections::VecDeque<Vertex> = g.vertices().filter(|&v| ends[v]).collect();
            for &v in &queue {
                dist[v] = 0;
            }
            while let Some(u) = queue.pop_front() {
                for &w in g.neighbors(u) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    dist
}

fn enumerate_impl(
    dom: &Arc<Graph>,
    cod: &Arc<Graph>,
    c: &Constraints,
    roots: Option<(Vertex, Vertex)>,
    opts: &EnumOptions,
    prune: bool,
) -> Result<Vec<GraphMap>> {
    if dom.n() > opts.max_dom {
        return Err(Error::BudgetExceeded(format!(
            "domain has {} vertices; the enumeration guard is {}",
            dom.n(),
            opts.max_dom
        )));
    }
    if c.needs_roots() && roots.is_none() {
        return Err(Error::NotRooted);
    }
    let (od, oc) = match (roots, c.needs_roots()) {
        (Some((rd, rc)), true) => (Some(RootOrder::new(dom, rd)?), Some(RootOrder::new(cod, rc)?)),
        _ => (None, None),
    };
    let (dom_end, cod_end): (Vec<bool>, Vec<bool>) = match (&od, &oc) {
        (Some(od), Some(oc)) => {
            let (de, ce) = (od.maximal(), oc.maximal());
            (
                dom.vertices().map(|v| de.contains(v)).collect(),
                cod.vertices().map(|v| ce.contains(v)).collect(),
            )
        }
        _ => {
            let (de, ce) = (end_vertices(dom), end_vertices(cod));
            (
                dom.vertices().map(|v| de.contains(v)).collect(),
                cod.vertices().map(|v| ce.contains(v)).collect(),
            )
        }
    };
    let (dom_end_dist, cod_end_dist) = (
        end_distances(dom, &dom_end, od.as_ref()),
        end_distances(cod, &cod_end, oc.as_ref()),
    );
    let mut values: Vec<Vec<Vertex>> = match &opts.allowed {
        Some(allowed) => {
            if allowed.len() != dom.n() {
                return Err(Error::InvalidInput("allowed-value table has the wrong length".into()));
            }
            allowed
                .iter()
                .map(|vs| {
                    let mut vs = vs.clone();
                    vs.sort_unstable();
                    vs.dedup();
                    vs.retain(|&y| y < cod.n());
                    vs
                })
                .collect()
        }
        None => vec![cod.vertices().collect(); dom.n()],
    };
    if let Some((rd, rc)) = roots.filter(|_| c.needs_roots()) {
        values[rd].retain(|&y| y == rc);
    }
    let nodes = AtomicU64::new(0);
    let search = Search {
        dom,
        cod,
        c: *c,
        od,
        oc,
        dom_end,
        cod_end,
        dom_end_dist,
        cod_end_dist,
        values,
        nodes: &nodes,
        budget: opts.node_budget,
        prune,
    };
    let finish = |assign: &[Vertex]| -> Option<GraphMap> {
        let mut m = GraphMap::new(Arc::clone(dom), Arc::clone(cod), assign.to_vec()).ok()?;
        if let Some((rd, rc)) = roots {
            m = m.with_roots(rd, rc).ok()?;
        }
        m.satisfies(c).then_some(m)
    };
    if dom.n() == 0 {
        return Ok(Vec::new());
    }
    let limit = opts.limit.unwrap_or(usize::MAX);
    if limit == usize::MAX && search.values[0].len() > 1 {
        // Independent subtrees per value of vertex 0, concatenated in order.
        let firsts = search.values[0].clone();
        let parts: Vec<Result<Vec<GraphMap>>> = par::map(&firsts, |&val| {
            let mut out = Vec::new();
            let mut hits = vec![0; cod.n()];
            hits[val] = 1;
            let mut a = vec![val];
            if prune && !search.consistent(&[], 0, val) {
                return Ok(out);
            }
            let missing = cod.n() - 1;
            search.run(&mut a, &mut hits, missing, &mut |asg| {
                if let Some(m) = finish(asg) {
                    out.push(m);
                }
                false
            })?;
            Ok(out)
        });
        let mut out = Vec::new();
        for p in parts {
            out.extend(p?);
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    let mut hits = vec![0; cod.n()];
    search.run(&mut Vec::with_capacity(dom.n()), &mut hits, cod.n(), &mut |asg| {
        if let Some(m) = finish(asg) {
            out.push(m);
        }
        out.len() >= limit
    })?;
    Ok(out)
}

/// All epimorphisms `dom -> cod` passing `c`, in lexicographic order of the
/// assignment. Order and end constraints need `roots`.
pub fn enumerate_epis(
    dom: impl Into<Arc<Graph>>,
    cod: impl Into<Arc<Graph>>,
    c: &Constraints,
    roots: Option<(Vertex, Vertex)>,
    opts: &EnumOptions,
) -> Result<Vec<GraphMap>> {
    enumerate_impl(&dom.into(), &cod.into(), c, roots, opts, true)
}

/// Same result as [`enumerate_epis`] without any pruning; a reference oracle.
pub fn enumerate_epis_unpruned(
    dom: impl Into<Arc<Graph>>,
    cod: impl Into<Arc<Graph>>,
    c: &Constraints,
    roots: Option<(Vertex, Vertex)>,
    opts: &EnumOptions,
) -> Result<Vec<GraphMap>> {
    enumerate_impl(&dom.into(), &cod.into(), c, roots, opts, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(dom: Graph, cod: Graph, a: &[usize]) -> GraphMap {
        GraphMap::new(dom, cod, a.to_vec()).unwrap()
    }

    fn arc_acb() -> Graph {
        // a=0, b=1, c=2; edges a-c, c-b
        Graph::new(3, [(0, 2), (2, 1)]).unwrap()
    }

    #[test]
    fn homomorphism_cases() {
        assert!(is_homomorphism(&GraphMap::identity(Graph::path(3))).verdict);
        assert!(is_homomorphism(&map(Graph::path(3), Graph::path(2), &[0, 0, 1])).verdict);
        let r = is_homomorphism(&map(Graph::path(2), Graph::path(3), &[0, 2]));
        assert_eq!(r.witness, Some(Witness::EdgeNotPreserved { u: 0, v: 1 }));
    }

    #[test]
    fn small_example_map_is_epi() {
        let f = map(arc_acb(), Graph::path(2), &[0, 0, 1]);
        assert!(is_epimorphism(&f).unwrap().verdict);
        assert!(is_confluent(&f).unwrap().verdict);
        assert!(is_light(&f).unwrap().verdict);
    }

    #[test]
    fn inclusion_misses_a_vertex() {
        let f = map(Graph::path(2), Graph::path(3), &[0, 1]);
        let r = is_epimorphism(&f).unwrap();
        assert_eq!(r.witness, Some(Witness::VertexMissed { y: 2 }));
    }

    #[test]
    fn vertex_surjective_but_not_edge_surjective() {
        // path onto a triangle, never using the edge {0, 2}
        let dom = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let cod = Graph::complete(3);
        let f = map(dom, cod, &[0, 1, 2, 2]);
        let r = is_epimorphism(&f).unwrap();
        assert!(!r.verdict);
        assert!(matches!(r.witness, Some(Witness::EdgeMissed { .. })));
        assert!(witness_holds(&f, r.witness.as_ref().unwrap()));
    }

    #[test]
    fn triangle_onto_edge_is_monotone() {
        let f = map(Graph::complete(3), Graph::path(2), &[0, 1, 1]);
        assert!(is_monotone(&f).unwrap().verdict);
    }

    #[test]
    fn constant_edge_map_is_not_light() {
        let f = map(Graph::path(2), Graph::point(), &[0, 0]);
        assert!(!is_light(&f).unwrap().verdict);
    }

    #[test]
    fn non_epi_is_rejected_by_class_checkers() {
        let f = map(Graph::path(2), Graph::path(3), &[0, 1]);
        assert_eq!(is_monotone(&f), Err(Error::NotEpimorphism));
    }

    #[test]
    fn swapped_edge_root_fails_order() {
        let f = map(Graph::path(2), Graph::path(2), &[1, 0]);
        let r = is_order_preserving(&f, 0, 0).unwrap();
        assert!(!r.verdict);
        assert!(witness_holds(&f, r.witness.as_ref().unwrap()));
    }

    #[test]
    fn leaf_collapse_onto_order_two_vertex() {
        // path 0-1-2-3 onto path 0-1-2, 3 -> 2? keep ends; collapse leaf 0 onto 1.
        let f = map(Graph::path(4), Graph::path(3), &[1, 1, 0, 2]);
        let r = is_end_preserving(&f, None);
        let r = r.unwrap();
        assert!(!r.verdict);
        assert!(witness_holds(&f, r.witness.as_ref().unwrap()));
    }

    #[test]
    fn compose_checks_middle() {
        let f = map(Graph::path(3), Graph::path(2), &[0, 0, 1]);
        let id = GraphMap::identity(Graph::path(2));
        assert_eq!(compose(&f, &id).unwrap().assign(), f.assign());
        assert!(compose(&id, &id).is_ok());
        assert!(compose(&id, &f).is_err());
    }

    #[test]
    fn p4_onto_edge_monotone_count() {
        let maps = enumerate_epis(
            Graph::path(4),
            Graph::path(2),
            &Constraints::monotone(),
            None,
            &EnumOptions::default(),
        )
        .unwrap();
        assert_eq!(maps.len(), 6);
        let assigns: Vec<&[usize]> = maps.iter().map(|m| m.assign()).collect();
        let mut sorted = assigns.clone();
        sorted.sort();
        assert_eq!(assigns, sorted);
    }

    #[test]
    fn point_onto_point() {
        let maps = enumerate_epis(
            Graph::point(),
            Graph::point(),
            &Constraints::NONE,
            None,
            &EnumOptions::default(),
        )
        .unwrap();
        assert_eq!(maps.len(), 1);
    }

    #[test]
    fn guard_and_budget() {
        let opts = EnumOptions {
            max_dom: 3,
            ..EnumOptions::default()
        };
        assert!(matches!(
            enumerate_epis(Graph::path(4), Graph::path(2), &Constraints::NONE, None, &opts),
            Err(Error::BudgetExceeded(_))
        ));
        let opts = EnumOptions {
            node_budget: 5,
            ..EnumOptions::default()
        };
        assert!(matches!(
            enumerate_epis(Graph::path(6), Graph::path(3), &Constraints::NONE, None, &opts),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn property_names_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.as_str().parse::<Property>().unwrap(), p);
        }
        let c = Constraints::parse_list("confluent, order,end").unwrap();
        assert!(c.confluent && c.order && c.end && !c.monotone);
    }
}
