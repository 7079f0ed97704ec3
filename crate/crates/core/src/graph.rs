//! Finite graphs with a reflexive, symmetric edge relation.
//!
//! Only nondegenerate edges `{u, v}` with `u != v` are stored. Every loop
//! `<v, v>` is implicitly present, so [`Graph::has_edge`] answers `true` for
//! `u == v` and homomorphism checks may collapse an edge onto a vertex.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

pub type Vertex = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    /// Sorted, `u < v`, no duplicates.
    edges: Vec<(Vertex, Vertex)>,
    adj: Vec<Vec<Vertex>>,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from nondegenerate edges. Pairs may be given in either
    /// orientation and repeated; loops and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Self> {
        let mut list = Vec::new();
        for (i, (u, v)) in edges.into_iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge #{i} ({u},{v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!(
                    "edge #{i} is a stored loop at {u}; loops are implicit"
                )));
            }
            list.push((u.min(v), u.max(v)));
        }
        Ok(Self::from_sorted(n, list))
    }

    fn from_sorted(n: usize, mut edges: Vec<(Vertex, Vertex)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for nb in &mut adj {
            nb.sort_unstable();
        }
        Graph {
            n,
            edges,
            adj,
            labels: None,
        }
    }

    pub fn point() -> Self {
        Self::from_sorted(1, Vec::new())
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        Self::from_sorted(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    /// Star with center `0` and leaves `1..=leaves`.
    pub fn star(leaves: usize) -> Self {
        Self::from_sorted(leaves + 1, (1..=leaves).map(|i| (0, i)).collect())
    }

    pub fn complete(n: usize) -> Self {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        Self::from_sorted(n, e)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Same graph without display names.
    pub fn unlabeled(&self) -> Self {
        Graph {
            labels: None,
            ..self.clone()
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> std::ops::Range<Vertex> {
        0..self.n
    }

    /// Stored (nondegenerate) edges, `u < v`, sorted.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: Vertex) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => v.to_string(),
        }
    }

    /// Membership in the full reflexive relation.
    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u == v || self.adj[u].binary_search(&v).is_ok()
    }

    /// Number of nondegenerate edges at `v`.
    pub fn order(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn all(&self) -> VertexSet {
        VertexSet::full(self.n)
    }

    /// Subgraph induced on `keep` (in ascending order). Returns the subgraph and
    /// the map from new indices to old ones.
    pub fn induced(&self, keep: &VertexSet) -> (Graph, Vec<Vertex>) {
        let old: Vec<Vertex> = keep.iter().filter(|&v| v < self.n).collect();
        let mut new_of = vec![usize::MAX; self.n];
        for (i, &v) in old.iter().enumerate() {
            new_of[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| new_of[u] != usize::MAX && new_of[v] != usize::MAX)
            .map(|&(u, v)| (new_of[u], new_of[v]))
            .collect();
        let mut g = Self::from_sorted(old.len(), edges);
        if let Some(l) = &self.labels {
            g.labels = Some(old.iter().map(|&v| l[v].clone()).collect());
        }
        (g, old)
    }
}

/// Subset of `0..universe`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexSet {
    bits: FixedBitSet,
}

impl VertexSet {
    pub fn empty(universe: usize) -> Self {
        VertexSet {
            bits: FixedBitSet::with_capacity(universe),
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        VertexSet { bits }
    }

    pub fn from_vertices(universe: usize, vs: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let mut s = Self::empty(universe);
        for v in vs {
            if v >= universe {
                return Err(Error::InvalidInput(format!("vertex {v} outside 0..{universe}")));
            }
            s.bits.insert(v);
        }
        Ok(s)
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.bits.contains(v)
    }

    pub fn insert(&mut self, v: Vertex) {
        self.bits.grow(v + 1);
        self.bits.insert(v);
    }

    pub fn remove(&mut self, v: Vertex) {
        if v < self.bits.len() {
            self.bits.set(v, false);
        }
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.bits.ones()
    }

    pub fn to_vec(&self) -> Vec<Vertex> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        if other.bits.len() > self.bits.len() {
            self.bits.grow(other.bits.len());
        }
        self.bits.union_with(&other.bits);
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        VertexSet { bits }
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        let mut s = VertexSet::empty(0);
        for v in iter {
            s.insert(v);
        }
        s
    }
}

/// Components of a subset under the induced nondegenerate edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPartition {
    component: Vec<Option<usize>>,
    count: usize,
}

impl ComponentPartition {
    pub fn count(&self) -> usize {
        self.count
    }

    /// `None` for vertices outside the partitioned subset.
    pub fn component_of(&self, v: Vertex) -> Option<usize> {
        self.component.get(v).copied().flatten()
    }

    /// Parts in order of their smallest vertex, each sorted ascending.
    pub fn parts(&self) -> Vec<Vec<Vertex>> {
        let mut parts = vec![Vec::new(); self.count];
        for (v, c) in self.component.iter().enumerate() {
            if let Some(c) = c {
                parts[*c].push(v);
            }
        }
        parts
    }
}

fn check_subset(g: &Graph, s: &VertexSet) -> Result<()> {
    if let Some(v) = s.iter().find(|&v| v >= g.n()) {
        return Err(Error::InvalidInput(format!(
            "vertex {v} is outside the graph (n = {})",
            g.n()
        )));
    }
    Ok(())
}

pub fn components(g: &Graph, s: &VertexSet) -> Result<ComponentPartition> {
    check_subset(g, s)?;
    let mut component = vec![None; g.n()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in s.iter() {
        if component[start].is_some() {
            continue;
        }
        component[start] = Some(count);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if s.contains(w) && component[w].is_none() {
                    component[w] = Some(count);
                    queue.push_back(w);
                }
            }
        }
        count += 1;
    }
    Ok(ComponentPartition { component, count })
}

/// The empty set counts as connected.
pub fn is_connected(g: &Graph, s: &VertexSet) -> Result<bool> {
    Ok(components(g, s)?.count() <= 1)
}

pub fn is_connected_graph(g: &Graph) -> bool {
    components(g, &g.all()).map(|c| c.count() <= 1).unwrap_or(false)
}

pub fn is_tree(g: &Graph) -> bool {
    g.n() >= 1 && g.edge_count() + 1 == g.n() && is_connected_graph(g)
}

pub fn vertex_order(g: &Graph, v: Vertex) -> usize {
    g.order(v)
}

/// Vertices of order at most one; an isolated vertex is an end vertex.
pub fn end_vertices(g: &Graph) -> VertexSet {
    VertexSet::from_vertices(g.n(), g.vertices().filter(|&v| g.order(v) <= 1)).expect("in range")
}

pub fn ramification_vertices(g: &Graph) -> VertexSet {
    VertexSet::from_vertices(g.n(), g.vertices().filter(|&v| g.order(v) >= 3)).expect("in range")
}

/// Endpoints of a finite arc, smaller index first. A single vertex is not an arc.
pub fn is_arc(g: &Graph) -> Option<(Vertex, Vertex)> {
    if g.n() < 2 || !is_tree(g) {
        return None;
    }
    if g.vertices().any(|v| g.order(v) > 2) {
        return None;
    }
    let mut ends = g.vertices().filter(|&v| g.order(v) == 1);
    let a = ends.next()?;
    let b = ends.next()?;
    Some((a, b))
}

/// The unique simple path from `a` to `b` in a tree.
pub fn unique_path(g: &Graph, a: Vertex, b: Vertex) -> Result<Vec<Vertex>> {
    if !is_tree(g) {
        return Err(Error::NotATree);
    }
    if a >= g.n() || b >= g.n() {
        return Err(Error::InvalidInput(format!("vertex out of range: {a}, {b}")));
    }
    let parent = bfs_parents(g, b);
    let mut path = vec![a];
    let mut cur = a;
    while cur != b {
        cur = parent[cur];
        path.push(cur);
    }
    Ok(path)
}

/// BFS parent pointers towards `root`; `parent[root] == root`.
pub(crate) fn bfs_parents(g: &Graph, root: Vertex) -> Vec<Vertex> {
    let mut parent = vec![usize::MAX; g.n()];
    parent[root] = root;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if parent[w] == usize::MAX {
                parent[w] = u;
                queue.push_back(w);
            }
        }
    }
    parent
}

/// Graph distance from `src` (usize::MAX when unreachable).
pub fn distances(g: &Graph, src: Vertex) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}
