//! Finite combinatorics of projective Fraïssé families of trees: map-class
//! checkers for graph epimorphisms, amalgamation constructions, monotone-light
//! factorization and a fundamental-sequence builder.

pub mod amalgamation;
pub mod canon;
pub mod dot;
pub mod error;
pub mod factorization;
pub mod families;
pub mod graph;
pub mod io;
pub mod limits;
pub mod morphisms;
pub mod par;
pub mod rooted;
pub mod suites;

pub use error::{Error, Result};
pub use graph::{Graph, Vertex, VertexSet};
pub use morphisms::{Constraints, GraphMap, Property, PropertyReport};
pub use rooted::RootedTree;
