//! Graphviz DOT output. Nodes and edges are written in index order, so equal
//! graphs give byte-identical text.

use std::fmt::Write;

use crate::graph::{end_vertices, Graph, Vertex};
use crate::rooted::rooted_end_vertices;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DotOptions {
    pub name: String,
    /// Shape end vertices as boxes, ramification vertices as double circles
    /// and fill the root.
    pub styled: bool,
    pub root: Option<Vertex>,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions {
            name: "G".into(),
            styled: true,
            root: None,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn export_dot(g: &Graph, opts: &DotOptions) -> String {
    let ends = match opts.root.filter(|&r| r < g.n()) {
        Some(r) => rooted_end_vertices(g, r).unwrap_or_else(|_| end_vertices(g)),
        None => end_vertices(g),
    };
    let mut out = String::new();
    writeln!(out, "graph \"{}\" {{", escape(&opts.name)).unwrap();
    if opts.styled {
        out.push_str("  node [shape=circle];\n");
    }
    for v in g.vertices() {
        let mut attrs = vec![format!("label=\"{}\"", escape(&g.label(v)))];
        if opts.styled {
            if ends.contains(v) {
                attrs.push("shape=box".into());
            } else if g.order(v) >= 3 {
                attrs.push("shape=doublecircle".into());
            }
            if opts.root == Some(v) {
                attrs.push("style=filled".into());
                attrs.push("fillcolor=gray80".into());
            }
        }
        writeln!(out, "  {v} [{}];", attrs.join(", ")).unwrap();
    }
    for &(u, v) in g.edges() {
        writeln!(out, "  {u} -- {v};").unwrap();
    }
    out.push_str("}\n");
    out
}
