//! Canonical forms and isomorphism-class enumeration for small graphs.
//!
//! Forests use an AHU-style parenthesis encoding (rooted at a center for
//! free trees). Other graphs fall back to individualization-refinement with a
//! minimum adjacency-bit certificate, which is exact and fast enough below a
//! dozen vertices.

use std::collections::BTreeMap;

use crate::graph::{components, is_tree, Graph, Vertex};

const TREE_ENUM_CAP: usize = 12;

/// Parenthesis encoding of the subtree at `v` (away from `parent`).
fn ahu(g: &Graph, v: Vertex, parent: Option<Vertex>) -> Vec<u8> {
    let mut kids: Vec<Vec<u8>> = g
        .neighbors(v)
        .iter()
        .filter(|&&w| Some(w) != parent)
        .map(|&w| ahu(g, w, Some(v)))
        .collect();
    kids.sort();
    let mut out = Vec::with_capacity(2 + kids.iter().map(Vec::len).sum::<usize>());
    out.push(b'(');
    for k in kids {
        out.extend(k);
    }
    out.push(b')');
    out
}

/// Centers of a tree (one or two vertices) within the vertex list `verts`.
fn tree_centers(g: &Graph, verts: &[Vertex]) -> Vec<Vertex> {
    if verts.len() <= 2 {
        return verts.to_vec();
    }
    let mut deg: BTreeMap<Vertex, usize> = verts.iter().map(|&v| (v, g.order(v))).collect();
    let mut layer: Vec<Vertex> = verts.iter().copied().filter(|v| deg[v] <= 1).collect();
    let mut remaining = verts.len();
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &leaf in &layer {
            deg.insert(leaf, 0);
            for &w in g.neighbors(leaf) {
                let d = deg.get_mut(&w).expect("same component");
                if *d > 0 {
                    *d -= 1;
                    if *d == 1 {
                        next.push(w);
                    }
                }
            }
        }
        layer = next;
    }
    layer.sort_unstable();
    layer
}

/// Encoding of the free tree spanned by `verts`, minimized over centers.
/// Returns the encoding and the center it was taken from.
fn free_tree_code(g: &Graph, verts: &[Vertex]) -> (Vec<u8>, Vertex) {
    tree_centers(g, verts)
        .into_iter()
        .map(|c| (ahu(g, c, None), c))
        .min()
        .expect("nonempty component")
}

/// Rooted-tree canonical form. Equal iff there is a root-preserving isomorphism.
pub fn rooted_canonical_form(g: &Graph, root: Vertex) -> Vec<u8> {
    let mut out = vec![b'R'];
    out.extend(ahu(g, root, None));
    out
}

/// Isomorphism-invariant byte string: equal iff the graphs are isomorphic.
pub fn canonical_form(g: &Graph) -> Vec<u8> {
    if g.edge_count() + count_components(g) == g.n() {
        let parts = components(g, &g.all()).expect("full set").parts();
        let mut codes: Vec<Vec<u8>> = parts.iter().map(|p| free_tree_code(g, p).0).collect();
        codes.sort();
        let mut out = vec![b'F'];
        for c in codes {
            out.extend(c);
        }
        return out;
    }
    let mut out = vec![b'G'];
    out.extend((g.n() as u32).to_be_bytes());
    out.extend(ir_certificate(g));
    out
}

fn count_components(g: &Graph) -> usize {
    components(g, &g.all()).expect("full set").count()
}

/// Relabels a tree canonically: vertex 0 is the chosen center and vertices
/// follow a breadth-first order with children sorted by encoding. Returns the
/// new graph and `old_of[new]`.
pub fn canonical_tree_labeling(g: &Graph) -> (Graph, Vec<Vertex>) {
    debug_assert!(is_tree(g));
    let all: Vec<Vertex> = g.vertices().collect();
    let (_, center) = free_tree_code(g, &all);
    relabel_from_root(g, center)
}

/// Same as [`canonical_tree_labeling`] but anchored at a given root.
pub fn canonical_rooted_labeling(g: &Graph, root: Vertex) -> (Graph, Vec<Vertex>) {
    relabel_from_root(g, root)
}

fn relabel_from_root(g: &Graph, root: Vertex) -> (Graph, Vec<Vertex>) {
    let mut old_of = vec![root];
    let mut parent_of = vec![usize::MAX];
    let mut head = 0;
    while head < old_of.len() {
        let v = old_of[head];
        let p = parent_of[head];
        let mut kids: Vec<(Vec<u8>, Vertex)> = g
            .neighbors(v)
            .iter()
            .filter(|&&w| w != p)
            .map(|&w| (ahu(g, w, Some(v)), w))
            .collect();
        kids.sort();
        for (_, w) in kids {
            old_of.push(w);
            parent_of.push(v);
        }
        head += 1;
    }
    let mut new_of = vec![0; g.n()];
    for (i, &v) in old_of.iter().enumerate() {
        new_of[v] = i;
    }
    let edges = g.edges().iter().map(|&(u, v)| (new_of[u], new_of[v]));
    (Graph::new(g.n(), edges).expect("relabeling"), old_of)
}

/// Ordered partition refinement until equitable.
fn refine(g: &Graph, mut cells: Vec<Vec<Vertex>>) -> Vec<Vec<Vertex>> {
    'outer: loop {
        for s in 0..cells.len() {
            let splitter = cells[s].clone();
            let mut next = Vec::with_capacity(cells.len());
            let mut split = false;
            for cell in &cells {
                if cell.len() == 1 {
                    next.push(cell.clone());
                    continue;
                }
                let mut by_count: BTreeMap<usize, Vec<Vertex>> = BTreeMap::new();
                for &v in cell {
                    let c = splitter.iter().filter(|&&w| w != v && g.has_edge(v, w)).count();
                    by_count.entry(c).or_default().push(v);
                }
                if by_count.len() > 1 {
                    split = true;
                }
                next.extend(by_count.into_values());
            }
            if split {
                cells = next;
                continue 'outer;
            }
        }
        return cells;
    }
}

fn ir_search(g: &Graph, cells: Vec<Vec<Vertex>>, best: &mut Option<Vec<u8>>) {
    let cells = refine(g, cells);
    match cells.iter().position(|c| c.len() > 1) {
        None => {
            let perm: Vec<Vertex> = cells.iter().map(|c| c[0]).collect();
            let mut bits = Vec::with_capacity(perm.len() * perm.len() / 2);
            for i in 0..perm.len() {
                for j in i + 1..perm.len() {
                    bits.push(g.has_edge(perm[i], perm[j]) as u8);
                }
            }
            if best.as_ref().is_none_or(|b| bits < *b) {
                *best = Some(bits);
            }
        }
        Some(target) => {
            for &v in &cells[target] {
                let mut next = cells[..target].to_vec();
                next.push(vec![v]);
                next.push(cells[target].iter().copied().filter(|&w| w != v).collect());
                next.extend(cells[target + 1..].iter().cloned());
                ir_search(g, next, best);
            }
        }
    }
}

fn ir_certificate(g: &Graph) -> Vec<u8> {
    if g.n() == 0 {
        return Vec::new();
    }
    let mut best = None;
    ir_search(g, vec![g.vertices().collect()], &mut best);
    best.expect("at least one leaf")
}

/// One canonically labeled representative per isomorphism class of trees
/// with exactly `n` vertices, sorted by canonical form. `n` is capped at 12.
pub fn enumerate_trees(n: usize) -> Vec<Graph> {
    assert!(
        (1..=TREE_ENUM_CAP).contains(&n),
        "tree enumeration supports 1..={TREE_ENUM_CAP} vertices"
    );
    let mut level: BTreeMap<Vec<u8>, Graph> = BTreeMap::new();
    level.insert(canonical_form(&Graph::point()), Graph::point());
    for k in 2..=n {
        let mut next = BTreeMap::new();
        for t in level.values() {
            for v in t.vertices() {
                let mut edges = t.edges().to_vec();
                edges.push((v, k - 1));
                let g = Graph::new(k, edges).expect("grown tree");
                next.entry(canonical_form(&g))
                    .or_insert_with(|| canonical_tree_labeling(&g).0);
            }
        }
        level = next;
    }
    level.into_values().collect()
}

/// Trees with `1..=n` vertices, smaller sizes first.
pub fn enumerate_trees_up_to(n: usize) -> Vec<Graph> {
    (1..=n).flat_map(enumerate_trees).collect()
}

/// One representative per rooted-isomorphism class of rooted trees with
/// exactly `n` vertices; the root of every representative is vertex 0.
pub fn enumerate_rooted_trees(n: usize) -> Vec<Graph> {
    assert!(
        (1..=TREE_ENUM_CAP).contains(&n),
        "tree enumeration supports 1..={TREE_ENUM_CAP} vertices"
    );
    let mut level: BTreeMap<Vec<u8>, Graph> = BTreeMap::new();
    level.insert(rooted_canonical_form(&Graph::point(), 0), Graph::point());
    for k in 2..=n {
        let mut next = BTreeMap::new();
        for t in level.values() {
            for v in t.vertices() {
                let mut edges = t.edges().to_vec();
                edges.push((v, k - 1));
                let g = Graph::new(k, edges).expect("grown tree");
                next.entry(rooted_canonical_form(&g, 0))
                    .or_insert_with(|| canonical_rooted_labeling(&g, 0).0);
            }
        }
        level = next;
    }
    level.into_values().collect()
}

pub fn enumerate_rooted_trees_up_to(n: usize) -> Vec<Graph> {
    (1..=n).flat_map(enumerate_rooted_trees).collect()
}

/// One representative per isomorphism class of graphs on exactly `n`
/// vertices (connected or not). Intended for `n <= 7`.
pub fn enumerate_graphs(n: usize) -> Vec<Graph> {
    let mut level: BTreeMap<Vec<u8>, Graph> = BTreeMap::new();
    let empty = Graph::new(0, []).expect("empty graph");
    level.insert(canonical_form(&empty), empty);
    for k in 1..=n {
        let mut next = BTreeMap::new();
        for g in level.values() {
            for mask in 0u32..(1 << (k - 1)) {
                let mut edges = g.edges().to_vec();
                edges.extend((0..k - 1).filter(|i| mask >> i & 1 == 1).map(|i| (i, k - 1)));
                let h = Graph::new(k, edges).expect("grown graph");
                next.entry(canonical_form(&h)).or_insert(h);
            }
        }
        level = next;
    }
    level.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_labelings_share_a_form() {
        let a = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let b = Graph::new(3, [(0, 2), (2, 1)]).unwrap();
        assert_eq!(canonical_form(&a), canonical_form(&b));
    }

    #[test]
    fn tree_counts() {
        let counts: Vec<usize> = (1..=7).map(|n| enumerate_trees(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 1, 2, 3, 6, 11]);
        assert!(enumerate_trees(4).iter().all(is_tree));
    }

    #[test]
    fn rooted_tree_counts() {
        let counts: Vec<usize> = (1..=7).map(|n| enumerate_rooted_trees(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 9, 20, 48]);
    }

    #[test]
    fn graph_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| enumerate_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 11, 34]);
    }

    #[test]
    fn cycle_is_not_a_path() {
        let c4 = Graph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let k13 = Graph::star(3);
        assert_ne!(canonical_form(&c4), canonical_form(&k13));
        assert_ne!(canonical_form(&c4), canonical_form(&Graph::path(4)));
    }

    #[test]
    fn rooted_labeling_puts_root_first() {
        let g = Graph::path(4);
        let (h, old_of) = canonical_rooted_labeling(&g, 2);
        assert_eq!(old_of[0], 2);
        assert_eq!(rooted_canonical_form(&h, 0), rooted_canonical_form(&g, 2));
    }
}
