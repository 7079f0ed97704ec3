//! JSON schemas for graphs, maps, amalgamation squares, factorizations and
//! inverse sequences, plus the fixture format.
//!
//! Parsing runs in two passes. Shape errors come from serde with the path
//! of the offending field; range and consistency errors are raised by the
//! conversion with the same kind of path (`bonds[2].assign[5]`).

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};

use crate::amalgamation::{pullback, search_amalgamate, AmalgamationResult, Certificate, MapVerdicts, Strategy};
use crate::error::{Error, Result};
use crate::factorization::Factorization;
use crate::families::{FamilyName, FamilySpec};
use crate::graph::{is_tree, Graph, Vertex};
use crate::limits::{ApproximantReport, InverseSequence, LogEntry, TaskKind};
use crate::morphisms::{Constraints, GraphMap, Property};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[Vertex; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapJson {
    pub dom: GraphJson,
    pub cod: GraphJson,
    pub assign: Vec<Vertex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<[Vertex; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmalgamationJson {
    pub d: GraphJson,
    pub f0: MapJson,
    pub g0: MapJson,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationJson {
    pub middle: GraphJson,
    pub m: MapJson,
    pub l: MapJson,
    pub classmap: Vec<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogJson {
    pub task: usize,
    pub kind: String,
    pub source: usize,
    pub stage: usize,
    pub f: MapJson,
    pub g: MapJson,
    pub h: MapJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceJson {
    pub family: String,
    pub stages: Vec<GraphJson>,
    pub bonds: Vec<MapJson>,
    pub log: Vec<LogJson>,
    #[serde(default)]
    pub deferrals: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportJson {
    pub stage: usize,
    pub vertices: usize,
    pub end_vertices: usize,
    pub ramification_vertices: usize,
    /// Vertex order to count.
    pub order_histogram: Vec<[usize; 2]>,
    pub max_fiber_diameter: f64,
    pub transitivity_violations: usize,
    pub separated_violations: usize,
    pub near_ramification: f64,
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: if path.is_empty() { ".".into() } else { path.into() },
        message: message.into(),
    }
}

fn join(path: &str, field: &str) -> String {
    if path.is_empty() {
        field.into()
    } else if field.starts_with('[') {
        format!("{path}{field}")
    } else {
        format!("{path}.{field}")
    }
}

/// Deserializes with the failing field's path in the error.
pub fn from_str_with_path<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(&path, e.into_inner().to_string())
    })
}

pub fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let p = path.as_ref();
    fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let p = path.as_ref();
    fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

// Graphs

pub fn graph_to_json(g: &Graph, root: Option<Vertex>) -> GraphJson {
    GraphJson {
        n: g.n(),
        edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
        labels: g.labels().map(<[String]>::to_vec),
        root,
    }
}

pub fn graph_from_json(j: &GraphJson, path: &str) -> Result<(Graph, Option<Vertex>)> {
    for (i, &[u, v]) in j.edges.iter().enumerate() {
        let at = join(path, &format!("edges[{i}]"));
        if u >= j.n || v >= j.n {
            return Err(schema(
                &at,
                format!("edge [{u}, {v}] references a vertex outside 0..{}", j.n),
            ));
        }
        if u == v {
            return Err(schema(&at, "loops are implicit and must not be listed"));
        }
    }
    let mut g = Graph::new(j.n, j.edges.iter().map(|&[u, v]| (u, v))).map_err(|e| schema(path, e.to_string()))?;
    if let Some(labels) = &j.labels {
        g = g
            .with_labels(labels.clone())
            .map_err(|e| schema(&join(path, "labels"), e.to_string()))?;
    }
    if let Some(r) = j.root {
        if r >= j.n {
            return Err(schema(&join(path, "root"), format!("root {r} is outside 0..{}", j.n)));
        }
    }
    Ok((g, j.root))
}

pub fn graph_to_string(g: &Graph, root: Option<Vertex>) -> String {
    to_pretty(&graph_to_json(g, root))
}

pub fn graph_from_str(text: &str) -> Result<(Graph, Option<Vertex>)> {
    graph_from_json(&from_str_with_path(text)?, "")
}

// Maps

pub fn map_to_json(m: &GraphMap) -> MapJson {
    let roots = m.roots();
    MapJson {
        dom: graph_to_json(m.dom(), roots.map(|r| r.0)),
        cod: graph_to_json(m.cod(), roots.map(|r| r.1)),
        assign: m.assign().to_vec(),
        roots: roots.map(|(a, b)| [a, b]),
    }
}

/// The graph-level `root` fields are informational; `roots` decides.
pub fn map_from_json(j: &MapJson, path: &str) -> Result<GraphMap> {
    let (dom, _) = graph_from_json(&j.dom, &join(path, "dom"))?;
    let (cod, _) = graph_from_json(&j.cod, &join(path, "cod"))?;
    map_on(Arc::new(dom), Arc::new(cod), j, path)
}

fn map_on(dom: Arc<Graph>, cod: Arc<Graph>, j: &MapJson, path: &str) -> Result<GraphMap> {
    if j.assign.len() != dom.n() {
        return Err(schema(
            &join(path, "assign"),
            format!("{} entries for {} domain vertices", j.assign.len(), dom.n()),
        ));
    }
    if let Some((i, v)) = j.assign.iter().enumerate().find(|(_, &v)| v >= cod.n()) {
        return Err(schema(
            &join(path, &format!("assign[{i}]")),
            format!("{v} is outside the codomain 0..{}", cod.n()),
        ));
    }
    let mut m = GraphMap::new(dom, cod, j.assign.clone()).map_err(|e| schema(path, e.to_string()))?;
    if let Some([a, b]) = j.roots {
        m = m
            .with_roots(a, b)
            .map_err(|e| schema(&join(path, "roots"), e.to_string()))?;
    }
    Ok(m)
}

pub fn map_to_string(m: &GraphMap) -> String {
    to_pretty(&map_to_json(m))
}

pub fn map_from_str(text: &str) -> Result<GraphMap> {
    map_from_json(&from_str_with_path(text)?, "")
}

pub(crate) fn serialize_maps<S: Serializer>(maps: &[GraphMap], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(maps.iter().map(map_to_json))
}

// Amalgamation squares

pub fn amalgamation_to_json(r: &AmalgamationResult) -> AmalgamationJson {
    AmalgamationJson {
        d: graph_to_json(&r.d, r.root),
        f0: map_to_json(&r.f0),
        g0: map_to_json(&r.g0),
        certificate: r.certificate.clone(),
    }
}

/// Loads a stored square. The stored certificate is kept as written; use
/// [`recertify`] to recompute it against the original legs.
pub fn amalgamation_from_json(j: &AmalgamationJson, path: &str) -> Result<AmalgamationResult> {
    let (d, root) = graph_from_json(&j.d, &join(path, "d"))?;
    let d = Arc::new(d);
    let (b, _) = graph_from_json(&j.f0.cod, &join(path, "f0.cod"))?;
    let (c, _) = graph_from_json(&j.g0.cod, &join(path, "g0.cod"))?;
    let f0 = map_on(Arc::clone(&d), Arc::new(b), &j.f0, &join(path, "f0"))?;
    let g0 = map_on(Arc::clone(&d), Arc::new(c), &j.g0, &join(path, "g0"))?;
    Ok(AmalgamationResult {
        d,
        root,
        f0,
        g0,
        certificate: j.certificate.clone(),
    })
}

pub fn amalgamation_to_string(r: &AmalgamationResult) -> String {
    to_pretty(&amalgamation_to_json(r))
}

pub fn amalgamation_from_str(text: &str) -> Result<AmalgamationResult> {
    amalgamation_from_json(&from_str_with_path(text)?, "")
}

/// Recomputes the certificate of a stored square for legs `f`, `g`.
pub fn recertify(f: &GraphMap, g: &GraphMap, r: &AmalgamationResult) -> AmalgamationResult {
    AmalgamationResult::certify(f, g, r.f0.clone(), r.g0.clone())
}

// Factorizations

pub fn factorization_to_json(fac: &Factorization) -> FactorizationJson {
    let root = fac.m.roots().map(|r| r.1);
    FactorizationJson {
        middle: graph_to_json(&fac.middle, root),
        m: map_to_json(&fac.m),
        l: map_to_json(&fac.l),
        classmap: fac.classmap.clone(),
    }
}

pub fn factorization_from_json(j: &FactorizationJson, path: &str) -> Result<Factorization> {
    let (middle, _) = graph_from_json(&j.middle, &join(path, "middle"))?;
    let middle = Arc::new(middle);
    let (dom, _) = graph_from_json(&j.m.dom, &join(path, "m.dom"))?;
    let (cod, _) = graph_from_json(&j.l.cod, &join(path, "l.cod"))?;
    let m = map_on(Arc::new(dom), Arc::clone(&middle), &j.m, &join(path, "m"))?;
    let l = map_on(Arc::clone(&middle), Arc::new(cod), &j.l, &join(path, "l"))?;
    if j.classmap != m.assign() {
        return Err(schema(
            &join(path, "classmap"),
            "differs from the monotone part's assignment",
        ));
    }
    Ok(Factorization {
        middle,
        m,
        l,
        classmap: j.classmap.clone(),
    })
}

pub fn factorization_to_string(fac: &Factorization) -> String {
    to_pretty(&factorization_to_json(fac))
}

pub fn factorization_from_str(text: &str) -> Result<Factorization> {
    factorization_from_json(&from_str_with_path(text)?, "")
}

// Inverse sequences

pub fn sequence_to_json(seq: &InverseSequence) -> SequenceJson {
    let root = seq.root();
    SequenceJson {
        family: seq.family.to_string(),
        stages: seq.stages.iter().map(|s| graph_to_json(s, root)).collect(),
        bonds: seq.bonds.iter().map(map_to_json).collect(),
        log: seq
            .log
            .iter()
            .map(|e| LogJson {
                task: e.task,
                kind: e.kind.as_str().into(),
                source: e.source,
                stage: e.stage,
                f: map_to_json(&e.f),
                g: map_to_json(&e.g),
                h: map_to_json(&e.h),
            })
            .collect(),
        deferrals: seq.deferrals,
    }
}

/// Bonds are rebuilt on the stage graphs and the whole sequence is validated
/// against its family.
pub fn sequence_from_json(j: &SequenceJson) -> Result<InverseSequence> {
    let family: FamilyName = j.family.parse().map_err(|e: Error| schema("family", e.to_string()))?;
    let stages: Vec<Arc<Graph>> = j
        .stages
        .iter()
        .enumerate()
        .map(|(i, s)| graph_from_json(s, &format!("stages[{i}]")).map(|(g, _)| Arc::new(g)))
        .collect::<Result<_>>()?;
    if stages.len() != j.bonds.len() + 1 {
        return Err(schema(
            "bonds",
            format!("{} bonds for {} stages", j.bonds.len(), stages.len()),
        ));
    }
    let mut bonds = Vec::with_capacity(j.bonds.len());
    for (i, b) in j.bonds.iter().enumerate() {
        let at = format!("bonds[{i}]");
        let (dom, _) = graph_from_json(&b.dom, &join(&at, "dom"))?;
        let (cod, _) = graph_from_json(&b.cod, &join(&at, "cod"))?;
        if dom != *stages[i + 1].as_ref() || cod != *stages[i].as_ref() {
            return Err(schema(
                &at,
                format!("does not map stage {} onto stage {}", i + 2, i + 1),
            ));
        }
        bonds.push(map_on(Arc::clone(&stages[i + 1]), Arc::clone(&stages[i]), b, &at)?);
    }
    let mut log = Vec::with_capacity(j.log.len());
    for (i, e) in j.log.iter().enumerate() {
        let at = format!("log[{i}]");
        let kind = TaskKind::parse(&e.kind).map_err(|err| schema(&join(&at, "kind"), err.to_string()))?;
        log.push(LogEntry {
            task: e.task,
            kind,
            source: e.source,
            stage: e.stage,
            f: map_from_json(&e.f, &join(&at, "f"))?,
            g: map_from_json(&e.g, &join(&at, "g"))?,
            h: map_from_json(&e.h, &join(&at, "h"))?,
        });
    }
    let seq = InverseSequence {
        family,
        stages,
        bonds,
        log,
        deferrals: j.deferrals,
    };
    seq.validate().map_err(|e| schema("", e.to_string()))?;
    Ok(seq)
}

pub fn sequence_to_string(seq: &InverseSequence) -> String {
    to_pretty(&sequence_to_json(seq))
}

pub fn sequence_from_str(text: &str) -> Result<InverseSequence> {
    sequence_from_json(&from_str_with_path(text)?)
}

pub fn report_to_json(r: &ApproximantReport) -> ReportJson {
    ReportJson {
        stage: r.stage,
        vertices: r.vertices,
        end_vertices: r.end_vertices,
        ramification_vertices: r.ramification_vertices,
        order_histogram: r.order_histogram.iter().map(|(&k, &v)| [k, v]).collect(),
        max_fiber_diameter: r.max_fiber_diameter,
        transitivity_violations: r.transitivity_violations,
        separated_violations: r.separated_violations,
        near_ramification: r.near_ramification,
    }
}

// Fixtures

/// A stored example with its expected outcome. `origin` says where the
/// expectation comes from: a worked example, an independent computation or
/// an elementary fact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    pub origin: String,
    pub note: String,
    pub case: FixtureCase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
// Fixtures are loaded one at a time, so the variant size does not matter.
#[allow(clippy::large_enum_variant)]
pub enum FixtureCase {
    /// Checker verdicts, property name to expected verdict.
    Check {
        map: MapJson,
        verdicts: Vec<(String, bool)>,
    },
    /// Pullback vertex and stored-edge counts.
    Pullback {
        f: MapJson,
        g: MapJson,
        vertices: usize,
        edges: usize,
    },
    /// A construction re-run from the legs must reproduce `result` exactly.
    Amalgamation {
        f: MapJson,
        g: MapJson,
        strategy: String,
        result: AmalgamationJson,
    },
    /// Exhaustive search up to `max_vertices` finds no square whose legs
    /// meet `constraints` (comma-separated property names).
    NoAmalgamation {
        f: MapJson,
        g: MapJson,
        constraints: String,
        max_vertices: usize,
    },
    Factorization {
        f: MapJson,
        result: FactorizationJson,
    },
    /// A stored sequence that must validate, with every log entry commuting.
    Sequence {
        sequence: SequenceJson,
    },
}

pub fn fixture_from_str(text: &str) -> Result<Fixture> {
    from_str_with_path(text)
}

pub fn load_fixture(path: impl AsRef<Path>) -> Result<Fixture> {
    fixture_from_str(&read_text(path)?)
}

/// Checks the stored expectation against a fresh computation. `Ok(false)`
/// reports a mismatch; malformed content is an error.
pub fn verify_fixture(fx: &Fixture) -> Result<bool> {
    match &fx.case {
        FixtureCase::Check { map, verdicts } => {
            let m = map_from_json(map, "case.map")?;
            for (name, expected) in verdicts {
                let p: Property = name.parse()?;
                if m.check(p)?.verdict != *expected {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        FixtureCase::Pullback { f, g, vertices, edges } => {
            let p = pullback(&map_from_json(f, "case.f")?, &map_from_json(g, "case.g")?)?;
            Ok(p.graph.n() == *vertices && p.graph.edge_count() == *edges)
        }
        FixtureCase::Amalgamation { f, g, strategy, result } => {
            let (f, g) = (map_from_json(f, "case.f")?, map_from_json(g, "case.g")?);
            let strategy: Strategy = strategy.parse()?;
            let fresh = crate::amalgamation::amalgamate(strategy, &f, &g, None)?;
            Ok(amalgamation_to_json(&fresh) == *result && fresh.certificate.commutes)
        }
        FixtureCase::NoAmalgamation {
            f,
            g,
            constraints,
            max_vertices,
        } => {
            let (f, g) = (map_from_json(f, "case.f")?, map_from_json(g, "case.g")?);
            let c = Constraints::parse_list(constraints)?;
            Ok(search_amalgamate(&f, &g, &c, *max_vertices)?.is_none())
        }
        FixtureCase::Factorization { f, result } => {
            let fresh = crate::factorization::ml_factorize(&map_from_json(f, "case.f")?)?;
            Ok(factorization_to_json(&fresh) == *result)
        }
        FixtureCase::Sequence { sequence } => {
            let seq = sequence_from_json(sequence)?;
            for e in &seq.log {
                if !seq.entry_commutes(e)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Re-derives leg verdicts; the stored ones must agree.
pub fn stored_certificate_consistent(r: &AmalgamationResult) -> bool {
    r.certificate.d_is_tree == is_tree(&r.d)
        && r.certificate.f0 == MapVerdicts::of(&r.f0)
        && r.certificate.g0 == MapVerdicts::of(&r.g0)
}

/// Family descriptor as JSON (registry view for the CLI).
pub fn family_to_string(spec: &FamilySpec) -> String {
    to_pretty(spec)
}
