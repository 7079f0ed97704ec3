use std::collections::BTreeSet;

use fraisse_core::canon::{canonical_form, enumerate_graphs, enumerate_trees};
use fraisse_core::graph::{components, is_connected, is_connected_graph, is_tree};
use fraisse_core::{Graph, VertexSet};
use proptest::prelude::*;

/// Tree from a Prüfer sequence over `0..seq.len() + 2`.
fn prufer_tree(seq: &[usize]) -> Graph {
    let n = seq.len() + 2;
    let mut degree = vec![1; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::new();
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    Graph::new(n, edges).unwrap()
}

fn permuted(g: &Graph, perm: &[usize]) -> Graph {
    Graph::new(g.n(), g.edges().iter().map(|&(u, v)| (perm[u], perm[v]))).unwrap()
}

fn random_tree() -> impl Strategy<Value = Graph> {
    (0usize..=10).prop_flat_map(|k| {
        let n = k + 2;
        prop::collection::vec(0..n, k).prop_map(|seq| prufer_tree(&seq))
    })
}

fn tree_and_permutation() -> impl Strategy<Value = (Graph, Vec<usize>)> {
    random_tree().prop_flat_map(|t| {
        let n = t.n();
        (Just(t), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

fn random_graph() -> impl Strategy<Value = Graph> {
    (1usize..=8).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let m = pairs.len();
        prop::collection::vec(any::<bool>(), m)
            .prop_map(move |keep| Graph::new(n, pairs.iter().zip(keep).filter(|p| p.1).map(|p| *p.0)).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn canonical_form_ignores_labels((t, perm) in tree_and_permutation()) {
        prop_assert_eq!(canonical_form(&t), canonical_form(&permuted(&t, &perm)));
    }

    #[test]
    fn components_partition_the_subset(g in random_graph(), mask in any::<u16>()) {
        let s = VertexSet::from_vertices(g.n(), (0..g.n()).filter(|v| mask >> v & 1 == 1)).unwrap();
        let parts = components(&g, &s).unwrap().parts();
        let union: BTreeSet<usize> = parts.iter().flatten().copied().collect();
        prop_assert_eq!(union, s.iter().collect::<BTreeSet<_>>());
        for (i, p) in parts.iter().enumerate() {
            for q in &parts[i + 1..] {
                prop_assert!(p.iter().all(|&u| q.iter().all(|&v| !g.has_edge(u, v))));
            }
        }
    }
}

/// Acyclicity by depth-first search with parent tracking.
fn dfs_acyclic(g: &Graph) -> bool {
    let mut seen = vec![false; g.n()];
    for s in g.vertices() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, usize::MAX)];
        while let Some((u, parent)) = stack.pop() {
            for &w in g.neighbors(u) {
                if w == parent {
                    continue;
                }
                if seen[w] {
                    return false;
                }
                seen[w] = true;
                stack.push((w, u));
            }
        }
    }
    true
}

#[test]
fn three_tree_predicates_agree_up_to_8_vertices() {
    let mut checked = 0;
    for n in 1..=8 {
        for g in enumerate_graphs(n) {
            let by_count = is_connected_graph(&g) && g.edge_count() == n - 1;
            let by_dfs = is_connected(&g, &g.all()).unwrap() && dfs_acyclic(&g);
            assert_eq!(is_tree(&g), by_count, "{g:?}");
            assert_eq!(by_count, by_dfs, "{g:?}");
            checked += 1;
        }
    }
    // Graphs on 1..=8 vertices up to isomorphism.
    assert_eq!(checked, 1 + 2 + 4 + 11 + 34 + 156 + 1044 + 12346);
}

/// Unicoherence over subgraphs given by edge sets: whenever two connected
/// subgraphs together cover every edge, their intersection (common vertices,
/// common edges) is connected. The empty intersection counts as connected.
fn unicoherent(g: &Graph) -> bool {
    let edges = g.edges();
    let m = edges.len();
    let full: u32 = if m == 0 { 0 } else { (1 << m) - 1 };
    let verts = |mask: u32| -> u32 {
        (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .fold(0, |acc, i| acc | 1 << edges[i].0 | 1 << edges[i].1)
    };
    let connected = |mask: u32| -> bool {
        let vs = verts(mask);
        if vs == 0 {
            return true;
        }
        let mut reach = 1u32 << vs.trailing_zeros();
        loop {
            let mut next = reach;
            for i in (0..m).filter(|i| mask >> i & 1 == 1) {
                let (a, b) = (1u32 << edges[i].0, 1u32 << edges[i].1);
                if next & (a | b) != 0 {
                    next |= a | b;
                }
            }
            if next == reach {
                return reach == vs;
            }
            reach = next;
        }
    };
    let conn: Vec<bool> = (0..=full).map(connected).collect();
    for e1 in (1..=full).filter(|&e| conn[e as usize]) {
        let rest = full & !e1;
        // E2 = rest plus any submask of E1; the intersection's edges are that submask.
        let mut sub = e1;
        loop {
            let e2 = rest | sub;
            if e2 != 0 && conn[e2 as usize] {
                let common = verts(e1) & verts(e2);
                let ok = if sub == 0 {
                    common.count_ones() <= 1
                } else {
                    conn[sub as usize] && verts(sub) == common
                };
                if !ok {
                    return false;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & e1;
        }
    }
    true
}

#[test]
fn connected_graphs_are_trees_iff_unicoherent() {
    for n in 1..=6 {
        for g in enumerate_graphs(n).into_iter().filter(is_connected_graph) {
            assert_eq!(is_tree(&g), unicoherent(&g), "{g:?}");
        }
    }
}

#[test]
fn tree_enumeration_matches_brute_force() {
    // Labeled trees via Prüfer sequences, deduplicated by canonical form.
    for n in 2usize..=7 {
        let mut forms = BTreeSet::new();
        let total = n.pow(n as u32 - 2);
        for code in 0..total {
            let seq: Vec<usize> = (0..n - 2).map(|i| code / n.pow(i as u32) % n).collect();
            forms.insert(canonical_form(&prufer_tree(&seq)));
        }
        let listed = enumerate_trees(n);
        let listed_forms: BTreeSet<_> = listed.iter().map(canonical_form).collect();
        assert_eq!(listed_forms.len(), listed.len(), "duplicates at n = {n}");
        assert_eq!(listed_forms, forms, "n = {n}");
    }
}
