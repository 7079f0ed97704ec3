//! Rooted trees, the root order, branches and fans.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{is_tree, Graph, Vertex, VertexSet};
use crate::morphisms::GraphMap;

const NO_PARENT: usize = usize::MAX;

/// `x <= y` iff `x` lies on the unique path from the root to `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootOrder {
    root: Vertex,
    parent: Vec<Vertex>,
    depth: Vec<usize>,
    children: Vec<Vec<Vertex>>,
}

impl RootOrder {
    /// Fails with `NotATree` unless `g` is a tree, and on an invalid root.
    pub fn new(g: &Graph, root: Vertex) -> Result<Self> {
        if !is_tree(g) {
            return Err(Error::NotATree);
        }
        if root >= g.n() {
            return Err(Error::InvalidInput(format!("root {root} out of range")));
        }
        let n = g.n();
        let mut parent = vec![NO_PARENT; n];
        let mut depth = vec![0; n];
        let mut children = vec![Vec::new(); n];
        let mut stack = vec![root];
        let mut seen = vec![false; n];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    depth[w] = depth[u] + 1;
                    children[u].push(w);
                    stack.push(w);
                }
            }
        }
        Ok(RootOrder {
            root,
            parent,
            depth,
            children,
        })
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        (self.parent[v] != NO_PARENT).then_some(self.parent[v])
    }

    pub fn depth(&self, v: Vertex) -> usize {
        self.depth[v]
    }

    pub fn children(&self, v: Vertex) -> &[Vertex] {
        &self.children[v]
    }

    pub fn leq(&self, x: Vertex, y: Vertex) -> bool {
        if self.depth[x] > self.depth[y] {
            return false;
        }
        let mut cur = y;
        while self.depth[cur] > self.depth[x] {
            cur = self.parent[cur];
        }
        cur == x
    }

    pub fn comparable(&self, x: Vertex, y: Vertex) -> bool {
        self.leq(x, y) || self.leq(y, x)
    }

    /// Maximal elements of the order.
    pub fn maximal(&self) -> VertexSet {
        VertexSet::from_vertices(
            self.parent.len(),
            (0..self.parent.len()).filter(|&v| self.children[v].is_empty()),
        )
        .expect("in range")
    }

    /// Vertices from the root down to `v`, inclusive.
    pub fn path_from_root(&self, v: Vertex) -> Vec<Vertex> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

/// End vertices of a rooted tree: the maximal elements of the root order.
/// They coincide with the order-one vertices except at a root of order one,
/// which is never an end here (a lone root is).
pub fn rooted_end_vertices(g: &Graph, root: Vertex) -> Result<VertexSet> {
    Ok(RootOrder::new(g, root)?.maximal())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    tree: Arc<Graph>,
    root: Vertex,
}

impl RootedTree {
    pub fn new(tree: impl Into<Arc<Graph>>, root: Vertex) -> Result<Self> {
        let tree = tree.into();
        if !is_tree(&tree) {
            return Err(Error::NotATree);
        }
        if root >= tree.n() {
            return Err(Error::InvalidInput(format!("root {root} out of range")));
        }
        Ok(RootedTree { tree, root })
    }

    pub fn tree(&self) -> &Graph {
        &self.tree
    }

    pub fn tree_arc(&self) -> Arc<Graph> {
        Arc::clone(&self.tree)
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn order(&self) -> RootOrder {
        RootOrder::new(&self.tree, self.root).expect("validated tree")
    }

    pub fn end_vertices(&self) -> VertexSet {
        self.order().maximal()
    }
}

/// Root-anchored, strictly increasing vertex sequence whose consecutive
/// elements are adjacent in the parent graph.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chain {
    pub verts: Vec<Vertex>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn last(&self) -> Vertex {
        *self.verts.last().expect("chains are nonempty")
    }
}

/// All maximal chains (root to each end vertex), in depth-first order with
/// children visited by ascending index.
pub fn branches(t: &RootedTree) -> Vec<Chain> {
    let order = t.order();
    let mut out = Vec::new();
    let mut stack = vec![vec![t.root()]];
    while let Some(path) = stack.pop() {
        let last = *path.last().expect("nonempty");
        let kids = order.children(last);
        if kids.is_empty() {
            out.push(Chain { verts: path });
            continue;
        }
        let mut sorted = kids.to_vec();
        sorted.sort_unstable();
        for &k in sorted.iter().rev() {
            let mut p = path.clone();
            p.push(k);
            stack.push(p);
        }
    }
    out
}

/// Only the root may be adjacent to two incomparable vertices.
pub fn is_fan(t: &RootedTree) -> bool {
    let order = t.order();
    let g = t.tree();
    g.vertices().filter(|&p| p != t.root()).all(|p| {
        let nb = g.neighbors(p);
        nb.iter()
            .enumerate()
            .all(|(i, &s)| nb[i + 1..].iter().all(|&u| order.comparable(s, u)))
    })
}

pub fn is_uniform_fan(t: &RootedTree) -> bool {
    if !is_fan(t) {
        return false;
    }
    let lens: Vec<usize> = branches(t).iter().map(Chain::len).collect();
    lens.windows(2).all(|w| w[0] == w[1])
}

/// Builds the wedge at vertex 0 of `count` paths, each with `len` vertices
/// including the shared root. Vertex at depth `k >= 1` of branch `i` is
/// `1 + i * (len - 1) + (k - 1)`.
fn uniform_fan(count: usize, len: usize) -> Graph {
    let per = len - 1;
    let mut edges = Vec::new();
    for i in 0..count {
        let base = 1 + i * per;
        for k in 0..per {
            let v = base + k;
            let prev = if k == 0 { 0 } else { v - 1 };
            edges.push((prev, v));
        }
    }
    Graph::new(1 + count * per, edges).expect("fan")
}

/// Maps each fan branch onto a chain of `t`: depth `k` goes to
/// `chain[min(k, chain.len() - 1)]`.
fn fan_onto_chains(t: &RootedTree, chains: &[Chain], len: usize) -> (RootedTree, GraphMap) {
    let fan = uniform_fan(chains.len(), len);
    let mut assign = vec![t.root(); fan.n()];
    for (i, c) in chains.iter().enumerate() {
        for k in 1..len {
            assign[1 + i * (len - 1) + (k - 1)] = c.verts[k.min(c.len() - 1)];
        }
    }
    let fan = Arc::new(fan);
    let map = GraphMap::new(Arc::clone(&fan), t.tree_arc(), assign)
        .and_then(|m| m.with_roots(0, t.root()))
        .expect("fan map is well formed");
    (RootedTree::new(fan, 0).expect("fan is a tree"), map)
}

/// Uniform fan with one branch per branch of `t`, all as long as the longest
/// branch of `t`, and the branchwise collapse onto `t`.
pub fn tree_to_uniform_fan(t: &RootedTree) -> (RootedTree, GraphMap) {
    let bs = branches(t);
    let len = bs.iter().map(Chain::len).max().expect("at least one branch");
    fan_onto_chains(t, &bs, len)
}

/// Lengthens every branch of a uniform fan to `len` vertices; the added tail of
/// each branch maps to that branch's end vertex.
pub fn stretch_fan(f: &RootedTree, len: usize) -> Result<(RootedTree, GraphMap)> {
    if !is_uniform_fan(f) {
        return Err(Error::Precondition("stretch_fan needs a uniform fan".into()));
    }
    let bs = branches(f);
    let cur = bs[0].len();
    if len < cur {
        return Err(Error::InvalidInput(format!(
            "target branch length {len} is below the current length {cur}"
        )));
    }
    Ok(fan_onto_chains(f, &bs, len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphisms::{is_end_preserving, is_epimorphism, is_order_preserving};

    fn triod_at_leaf() -> RootedTree {
        // leaf 1 - center 0 - leaves 2, 3
        RootedTree::new(Graph::star(3), 1).unwrap()
    }

    #[test]
    fn order_basics() {
        let t = RootedTree::new(Graph::star(3), 0).unwrap();
        let o = t.order();
        assert!((0..4).all(|v| o.leq(0, v)));
        assert!(!o.comparable(1, 2));
    }

    #[test]
    fn triod_s_order() {
        // A=0, B=1, C=2, D=3
        let s = RootedTree::new(Graph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap(), 0).unwrap();
        let o = s.order();
        assert!(o.leq(0, 1) && o.leq(1, 2) && o.leq(1, 3));
        assert!(!o.comparable(2, 3));
    }

    #[test]
    fn branch_shapes() {
        let p = RootedTree::new(Graph::path(4), 0).unwrap();
        assert_eq!(branches(&p).len(), 1);
        assert_eq!(branches(&p)[0].len(), 4);
        let s = RootedTree::new(Graph::star(3), 0).unwrap();
        assert!(branches(&s).iter().all(|b| b.len() == 2));
        assert_eq!(branches(&s).len(), 3);
        let lens: Vec<usize> = branches(&triod_at_leaf()).iter().map(Chain::len).collect();
        assert_eq!(lens, vec![3, 3]);
    }

    #[test]
    fn fan_predicates() {
        let s = RootedTree::new(Graph::star(3), 0).unwrap();
        assert!(is_uniform_fan(&s));
        let mid = RootedTree::new(Graph::path(5), 2).unwrap();
        assert!(is_uniform_fan(&mid));
        let off = RootedTree::new(Graph::path(5), 1).unwrap();
        assert!(is_fan(&off) && !is_uniform_fan(&off));
        assert!(!is_fan(&triod_at_leaf()));
    }

    #[test]
    fn triod_to_fan() {
        let t = triod_at_leaf();
        let (fan, map) = tree_to_uniform_fan(&t);
        assert!(is_uniform_fan(&fan));
        assert_eq!(branches(&fan).len(), 2);
        assert!(branches(&fan).iter().all(|b| b.len() == 3));
        assert!(is_epimorphism(&map).unwrap().verdict);
        assert!(is_order_preserving(&map, 0, 1).unwrap().verdict);
        assert!(is_end_preserving(&map, Some((0, 1))).unwrap().verdict);
    }

    #[test]
    fn stretch_edge_to_three() {
        let e = RootedTree::new(Graph::path(2), 0).unwrap();
        let (p, map) = stretch_fan(&e, 3).unwrap();
        assert_eq!(p.tree().n(), 3);
        assert_eq!(map.assign(), &[0, 1, 1]);
        let (same, id) = stretch_fan(&e, 2).unwrap();
        assert_eq!(same.tree().n(), 2);
        assert_eq!(id.assign(), &[0, 1]);
        assert!(stretch_fan(&e, 1).is_err());
    }
}
