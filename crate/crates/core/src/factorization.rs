//! Monotone-light factorization.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::morphisms::{is_epimorphism, GraphMap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub middle: Arc<Graph>,
    /// Monotone part, `dom -> middle`.
    pub m: GraphMap,
    /// Light part, `middle -> cod`.
    pub l: GraphMap,
    /// Class id of each domain vertex (same as `m.assign()`).
    pub classmap: Vec<Vertex>,
}

/// Splits `f` as `l ∘ m` where the classes of `m` are the components of the
/// fibers of `f`. Class ids follow the smallest member vertex.
pub fn ml_factorize(f: &GraphMap) -> Result<Factorization> {
    match is_epimorphism(f) {
        Ok(r) if r.verdict => {}
        _ => return Err(Error::NotEpimorphism),
    }
    let dom = f.dom();
    let a = f.assign();
    let mut class = vec![usize::MAX; dom.n()];
    let mut reps = Vec::new();
    for s in dom.vertices() {
        if class[s] != usize::MAX {
            continue;
        }
        let id = reps.len();
        reps.push(s);
        class[s] = id;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &w in dom.neighbors(u) {
                if class[w] == usize::MAX && a[w] == a[s] {
                    class[w] = id;
                    queue.push_back(w);
                }
            }
        }
    }
    let edges: Vec<(usize, usize)> = dom
        .edges()
        .iter()
        .map(|&(u, v)| (class[u], class[v]))
        .filter(|(x, y)| x != y)
        .collect();
    let middle = Arc::new(Graph::new(reps.len(), edges)?);
    let light_assign = reps.iter().map(|&r| a[r]).collect();
    let mut m = GraphMap::new(f.dom_arc(), Arc::clone(&middle), class.clone())?;
    let mut l = GraphMap::new(Arc::clone(&middle), f.cod_arc(), light_assign)?;
    if let Some((rd, rc)) = f.roots() {
        m = m.with_roots(rd, class[rd])?;
        l = l.with_roots(class[rd], rc)?;
    }
    Ok(Factorization {
        middle,
        m,
        l,
        classmap: class,
    })
}
