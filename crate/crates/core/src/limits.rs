//! Fundamental sequences built by dovetailed amalgamation, threads through
//! them, and statistics of the finite approximants.
//!
//! Stages are numbered from 1. Stage 1 is the single-vertex tree and
//! `bonds[i]` maps stage `i + 2` onto stage `i + 1`. Every stage is stored in
//! canonical labeling, so rooted families always have their root at 0.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::canon::{canonical_form, canonical_rooted_labeling, canonical_tree_labeling, rooted_canonical_form};
use crate::error::{Error, Result};
use crate::families::{subdivide_edge, FamilyName, FamilySpec};
use crate::graph::{distances, end_vertices, ramification_vertices, Graph, Vertex};
use crate::morphisms::{compose, enumerate_epis, EnumOptions, GraphMap};
use crate::par;
use crate::rooted::rooted_end_vertices;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Number of bonds to build.
    pub depth: usize,
    /// Largest `H` (and `G`) in coverage and factorization tasks.
    pub cap: usize,
    /// Family maps `F_n -> G` scheduled per target `G`.
    pub maps_per_target: usize,
    /// Amalgamations producing more vertices than this are deferred.
    pub stage_vertex_budget: usize,
    /// Also schedule, for every path `a - b - c` of each new stage, the
    /// subdivision of `a - b` against the identity.
    pub separation_tasks: bool,
}

impl BuildOptions {
    pub fn new(depth: usize, cap: usize) -> Self {
        BuildOptions {
            depth,
            cap,
            maps_per_target: 2,
            stage_vertex_budget: 256,
            separation_tasks: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskKind {
    /// Constant maps `F_n -> point <- H`: condition (1).
    Coverage,
    /// Identity of `F_n` against the subdivision of one edge. Sorted ahead of
    /// factorization so separation keeps pace with the stage count.
    Separation,
    /// `f: F_n -> G`, `g: H -> G`: condition (2).
    Factorization,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Coverage => "coverage",
            TaskKind::Factorization => "factorization",
            TaskKind::Separation => "separation",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coverage" => Ok(TaskKind::Coverage),
            "factorization" => Ok(TaskKind::Factorization),
            "separation" => Ok(TaskKind::Separation),
            other => Err(Error::InvalidInput(format!("unknown task kind `{other}`"))),
        }
    }
}

/// A processed task: `f: F_source -> G` and `g: H -> G` were amalgamated into
/// stage `stage` with bond-side projection onto the then-last stage and
/// `h: F_stage -> H`, so that `g ∘ h = f ∘ α` from `stage` down to `source`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub task: usize,
    pub kind: TaskKind,
    pub source: usize,
    pub stage: usize,
    pub f: GraphMap,
    pub g: GraphMap,
    pub h: GraphMap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InverseSequence {
    pub family: FamilyName,
    pub stages: Vec<Arc<Graph>>,
    pub bonds: Vec<GraphMap>,
    pub log: Vec<LogEntry>,
    /// Tasks pushed back by the vertex budget, counted per deferral.
    pub deferrals: usize,
}

impl InverseSequence {
    pub fn depth(&self) -> usize {
        self.bonds.len()
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn spec(&self) -> FamilySpec {
        FamilySpec::get(self.family)
    }

    pub fn root(&self) -> Option<Vertex> {
        self.spec().rooted.then_some(0)
    }

    /// Stage `n`, 1-based.
    pub fn stage(&self, n: usize) -> Result<&Arc<Graph>> {
        n.checked_sub(1)
            .and_then(|i| self.stages.get(i))
            .ok_or_else(|| Error::InvalidInput(format!("no stage {n} (have {})", self.stages.len())))
    }

    /// `α_n^m: F_m -> F_n` for `m >= n`; the identity when `m == n`.
    pub fn projection(&self, m: usize, n: usize) -> Result<GraphMap> {
        if n > m {
            return Err(Error::InvalidInput(format!(
                "cannot project stage {m} to later stage {n}"
            )));
        }
        let top = Arc::clone(self.stage(m)?);
        self.stage(n)?;
        let mut p = GraphMap::identity(top);
        if let Some(r) = self.root() {
            p = p.with_roots(r, r)?;
        }
        for k in (n..m).rev() {
            p = compose(&p, &self.bonds[k - 1])?;
        }
        Ok(p)
    }

    /// Stage structure and every bond against the family.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec();
        if self.stages.len() != self.bonds.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} stages do not fit {} bonds",
                self.stages.len(),
                self.bonds.len()
            )));
        }
        if self.stages[0].n() != 1 {
            return Err(Error::InvalidInput("the first stage must be a single vertex".into()));
        }
        for (i, s) in self.stages.iter().enumerate() {
            if !spec.member(s, self.root()) {
                return Err(Error::InvalidInput(format!(
                    "stage {} is not in family {}",
                    i + 1,
                    self.family
                )));
            }
        }
        let bad = par::map(&(0..self.bonds.len()).collect::<Vec<_>>(), |&i| {
            let b = &self.bonds[i];
            let fits = crate::morphisms::same_graph(b.dom(), &self.stages[i + 1])
                && crate::morphisms::same_graph(b.cod(), &self.stages[i]);
            (!(fits && b.roots() == self.root().map(|r| (r, r)) && spec.map_in_family(b))).then_some(i)
        });
        if let Some(i) = bad.into_iter().flatten().next() {
            return Err(Error::InvalidInput(format!(
                "bond from stage {} to stage {} fails the family checks",
                i + 2,
                i + 1
            )));
        }
        Ok(())
    }

    /// `g ∘ h = f ∘ α_source^stage` at every vertex of the entry's stage.
    pub fn entry_commutes(&self, e: &LogEntry) -> Result<bool> {
        let alpha = self.projection(e.stage, e.source)?;
        Ok(crate::morphisms::same_graph(e.h.dom(), self.stage(e.stage)?)
            && (0..e.h.dom().n()).all(|x| e.g.apply(e.h.apply(x)) == e.f.apply(alpha.apply(x))))
    }
}

struct Task {
    id: usize,
    kind: TaskKind,
    source: usize,
    f: GraphMap,
    g: GraphMap,
}

type TaskKey = (usize, u8, Vec<u8>, Vec<Vertex>, Vec<Vertex>, usize);

struct Queue {
    order: BTreeSet<TaskKey>,
    tasks: BTreeMap<usize, Task>,
    next_id: usize,
    /// Re-queued tasks sort after everything created so far.
    tail: usize,
}

impl Queue {
    fn new() -> Self {
        Queue {
            order: BTreeSet::new(),
            tasks: BTreeMap::new(),
            next_id: 0,
            tail: 0,
        }
    }

    fn key(t: &Task, rank: usize, rooted: bool) -> TaskKey {
        let h = t.g.dom();
        let form = match (rooted, t.g.roots()) {
            (true, Some((r, _))) => rooted_canonical_form(h, r),
            _ => canonical_form(h),
        };
        (
            rank,
            t.kind as u8,
            form,
            t.f.assign().to_vec(),
            t.g.assign().to_vec(),
            t.id,
        )
    }

    fn push(&mut self, kind: TaskKind, source: usize, f: GraphMap, g: GraphMap, rooted: bool) {
        let t = Task {
            id: self.next_id,
            kind,
            source,
            f,
            g,
        };
        self.next_id += 1;
        self.order.insert(Self::key(&t, source, rooted));
        self.tasks.insert(t.id, t);
    }

    fn requeue(&mut self, t: Task, rooted: bool, newest: usize) {
        self.tail = self.tail.max(newest) + 1;
        self.order.insert(Self::key(&t, self.tail, rooted));
        self.tasks.insert(t.id, t);
    }

    fn pop(&mut self) -> Option<Task> {
        let key = self.order.pop_first()?;
        self.tasks.remove(&key.5)
    }

    fn len(&self) -> usize {
        self.tasks.len()
    }
}

fn enum_opts(limit: Option<usize>) -> EnumOptions {
    EnumOptions {
        max_dom: usize::MAX,
        limit,
        ..EnumOptions::default()
    }
}

fn rooted_at(m: GraphMap, roots: Option<(Vertex, Vertex)>) -> Result<GraphMap> {
    match roots {
        Some((a, b)) => m.with_roots(a, b),
        None => Ok(m),
    }
}

/// Relabels `d` canonically and transports the two legs.
fn canonical_stage(d: &Graph, root: Option<Vertex>, legs: [&GraphMap; 2]) -> Result<(Arc<Graph>, [GraphMap; 2])> {
    let (g, old_of) = match root {
        Some(r) => canonical_rooted_labeling(d, r),
        None => canonical_tree_labeling(d),
    };
    let g = Arc::new(g.unlabeled());
    let mut out = Vec::with_capacity(2);
    for leg in legs {
        let assign = old_of.iter().map(|&v| leg.apply(v)).collect();
        let m = GraphMap::new(Arc::clone(&g), leg.cod_arc(), assign)?;
        out.push(rooted_at(m, leg.roots().map(|(_, c)| (0, c)))?);
    }
    let [a, b]: [GraphMap; 2] = out.try_into().expect("two legs");
    Ok((g, [a, b]))
}

struct Builder<'a> {
    spec: FamilySpec,
    opts: &'a BuildOptions,
    /// Family trees up to the cap.
    small: Vec<Arc<Graph>>,
    queue: Queue,
}

impl Builder<'_> {
    fn root(&self) -> Option<Vertex> {
        self.spec.rooted.then_some(0)
    }

    fn roots(&self) -> Option<(Vertex, Vertex)> {
        self.root().map(|r| (r, r))
    }

    fn schedule(&mut self, stage: &Arc<Graph>, index: usize) -> Result<()> {
        let rooted = self.spec.rooted;
        let point = Arc::new(Graph::point());
        if index == 1 {
            for h in self.small.clone() {
                if h.n() < 2 {
                    continue;
                }
                let f = rooted_at(
                    GraphMap::constant(Arc::clone(stage), Arc::clone(&point), 0)?,
                    self.roots(),
                )?;
                let g = rooted_at(GraphMap::constant(Arc::clone(&h), Arc::clone(&point), 0)?, self.roots())?;
                self.queue.push(TaskKind::Coverage, index, f, g, rooted);
            }
            return Ok(());
        }
        for target in self.small.clone() {
            if target.n() < 2 {
                continue;
            }
            let fs = enumerate_epis(
                Arc::clone(stage),
                Arc::clone(&target),
                &self.spec.constraints,
                self.roots(),
                &enum_opts(Some(self.opts.maps_per_target)),
            )?;
            if fs.is_empty() {
                continue;
            }
            for h in self.small.clone() {
                if h.n() <= target.n() {
                    continue;
                }
                let gs = enumerate_epis(
                    Arc::clone(&h),
                    Arc::clone(&target),
                    &self.spec.constraints,
                    self.roots(),
                    &enum_opts(None),
                )?;
                for f in &fs {
                    for g in &gs {
                        self.queue
                            .push(TaskKind::Factorization, index, f.clone(), g.clone(), rooted);
                    }
                }
            }
        }
        if self.opts.separation_tasks {
            let id = rooted_at(GraphMap::identity(Arc::clone(stage)), self.roots())?;
            for b in stage.vertices() {
                for &a in stage.neighbors(b) {
                    if stage.order(b) < 2 {
                        continue;
                    }
                    let (_, g) = subdivide_edge(stage, a, b, self.root())?;
                    if self.spec.map_in_family(&g) {
                        self.queue.push(TaskKind::Separation, index, id.clone(), g, rooted);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds `opts.depth` bonds of a fundamental sequence for `spec`, starting
/// from the single-vertex tree. Tasks are processed in the order (stage
/// created, kind, canonical form of `H`, maps); a task whose amalgamation
/// exceeds the vertex budget goes to the back of the queue. The build stops
/// early only when the queue runs dry.
pub fn build_sequence(spec: &FamilySpec, opts: &BuildOptions) -> Result<InverseSequence> {
    let root = spec.rooted.then_some(0);
    let mut seq = InverseSequence {
        family: spec.name,
        stages: vec![Arc::new(Graph::point())],
        bonds: Vec::new(),
        log: Vec::new(),
        deferrals: 0,
    };
    let mut b = Builder {
        spec: spec.clone(),
        opts,
        small: spec.trees_up_to(opts.cap).into_iter().map(Arc::new).collect(),
        queue: Queue::new(),
    };
    b.schedule(&Arc::clone(&seq.stages[0]), 1)?;
    let mut deferred_in_a_row = 0;
    while seq.bonds.len() < opts.depth {
        let Some(task) = b.queue.pop() else { break };
        let current = seq.stages.len();
        let f = compose(&seq.projection(current, task.source)?, &task.f)?;
        let tag = |e: String| Error::ConstructionFailed(format!("task {} ({}): {e}", task.id, task.kind.as_str()));
        let r = match spec.amalgamate_within(&f, &task.g, opts.stage_vertex_budget) {
            Ok(Some(r)) if spec.accepts(&r) => r,
            Ok(Some(_)) => return Err(tag(format!("amalgamation not certified in family {}", spec.name))),
            Err(e) => return Err(tag(e.to_string())),
            Ok(None) => {
                seq.deferrals += 1;
                deferred_in_a_row += 1;
                if deferred_in_a_row > b.queue.len() {
                    return Err(Error::BudgetExceeded(format!(
                        "every pending task exceeds the stage budget of {} vertices",
                        opts.stage_vertex_budget
                    )));
                }
                b.queue.requeue(task, spec.rooted, current);
                continue;
            }
        };
        deferred_in_a_row = 0;
        let (stage, [alpha, h]) = canonical_stage(&r.d, r.root.filter(|_| root.is_some()), [&r.f0, &r.g0])?;
        seq.stages.push(Arc::clone(&stage));
        seq.bonds.push(alpha);
        seq.log.push(LogEntry {
            task: task.id,
            kind: task.kind,
            source: task.source,
            stage: current + 1,
            f: task.f,
            g: task.g,
            h,
        });
        if seq.bonds.len() < opts.depth {
            b.schedule(&stage, current + 1)?;
        }
    }
    Ok(seq)
}

/// One vertex per stage, compatible with the bonds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Thread {
    pub verts: Vec<Vertex>,
}

impl Thread {
    /// The thread through vertex `v` of stage `m`, stages `1..=m`.
    pub fn through(seq: &InverseSequence, m: usize, v: Vertex) -> Result<Self> {
        if v >= seq.stage(m)?.n() {
            return Err(Error::InvalidInput(format!("vertex {v} is not in stage {m}")));
        }
        let mut verts = vec![v];
        let mut cur = v;
        for k in (1..m).rev() {
            cur = seq.bonds[k - 1].apply(cur);
            verts.push(cur);
        }
        verts.reverse();
        Ok(Thread { verts })
    }

    pub fn is_compatible(&self, seq: &InverseSequence) -> bool {
        self.verts.len() <= seq.stage_count()
            && self.verts.iter().enumerate().all(|(i, &v)| v < seq.stages[i].n())
            && self
                .verts
                .windows(2)
                .enumerate()
                .all(|(i, w)| seq.bonds[i].apply(w[1]) == w[0])
    }
}

/// `2^-n` for the first stage `n` (counted from 1) where the threads differ,
/// 0 when they agree everywhere.
pub fn thread_metric(seq: &InverseSequence, a: &Thread, b: &Thread) -> Result<f64> {
    if a.verts.len() != b.verts.len() {
        return Err(Error::InvalidInput(format!(
            "threads of depth {} and {}",
            a.verts.len(),
            b.verts.len()
        )));
    }
    for t in [a, b] {
        if !t.is_compatible(seq) {
            return Err(Error::InvalidInput("thread is not compatible with the bonds".into()));
        }
    }
    Ok(match a.verts.iter().zip(&b.verts).position(|(x, y)| x != y) {
        Some(i) => 0.5f64.powi(i as i32 + 1),
        None => 0.0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproximantReport {
    pub stage: usize,
    pub vertices: usize,
    pub end_vertices: usize,
    pub ramification_vertices: usize,
    pub order_histogram: BTreeMap<usize, usize>,
    /// Largest thread-metric diameter of a fiber of `F_last -> F_stage`.
    pub max_fiber_diameter: f64,
    /// Paths `x - y - z` with `x`, `z` distinct and not adjacent.
    pub transitivity_violations: usize,
    /// Of those, the ones whose projections to stage `max(1, stage / 2)` are
    /// pairwise distinct.
    pub separated_violations: usize,
    /// Share of vertices within distance 2 of a ramification vertex.
    pub near_ramification: f64,
}

pub fn approximant_report(seq: &InverseSequence, n: usize) -> Result<ApproximantReport> {
    let g = Arc::clone(seq.stage(n)?);
    let ends = match seq.root() {
        Some(r) => rooted_end_vertices(&g, r)?,
        None => end_vertices(&g),
    };
    let ram = ramification_vertices(&g);
    let mut order_histogram = BTreeMap::new();
    for v in g.vertices() {
        *order_histogram.entry(g.order(v)).or_insert(0) += 1;
    }

    let last = seq.stage_count();
    let down = seq.projection(last, n)?;
    let mut max_fiber_diameter: f64 = 0.0;
    let threads: Vec<Thread> = (0..seq.stage(last)?.n())
        .map(|v| Thread::through(seq, last, v))
        .collect::<Result<_>>()?;
    for x in g.vertices() {
        let fiber: Vec<&Thread> = (0..threads.len())
            .filter(|&v| down.apply(v) == x)
            .map(|v| &threads[v])
            .collect();
        if let Some(first) = fiber.first() {
            for t in &fiber[1..] {
                max_fiber_diameter = max_fiber_diameter.max(thread_metric(seq, first, t)?);
            }
        }
    }

    let low = (n / 2).max(1);
    let proj = seq.projection(n, low)?;
    let (mut transitivity_violations, mut separated_violations) = (0, 0);
    for y in g.vertices() {
        let nb = g.neighbors(y);
        for (i, &x) in nb.iter().enumerate() {
            for &z in &nb[i + 1..] {
                if g.has_edge(x, z) {
                    continue;
                }
                transitivity_violations += 1;
                let (px, py, pz) = (proj.apply(x), proj.apply(y), proj.apply(z));
                if px != py && py != pz && px != pz {
                    separated_violations += 1;
                }
            }
        }
    }

    let near = if ram.is_empty() {
        0
    } else {
        let mut best = vec![usize::MAX; g.n()];
        for r in ram.iter() {
            for (v, d) in distances(&g, r).into_iter().enumerate() {
                best[v] = best[v].min(d);
            }
        }
        best.iter().filter(|&&d| d <= 2).count()
    };

    Ok(ApproximantReport {
        stage: n,
        vertices: g.n(),
        end_vertices: ends.len(),
        ramification_vertices: ram.len(),
        order_histogram,
        max_fiber_diameter,
        transitivity_violations,
        separated_violations,
        near_ramification: near as f64 / g.n() as f64,
    })
}

/// Every end vertex of stage `n` has an end vertex of stage `n + 1` over it.
pub fn ends_lift(seq: &InverseSequence, n: usize) -> Result<bool> {
    let (lo, hi) = (seq.stage(n)?, seq.stage(n + 1)?);
    let ends = |g: &Graph| match seq.root() {
        Some(r) => rooted_end_vertices(g, r),
        None => Ok(end_vertices(g)),
    };
    let (lo_ends, hi_ends) = (ends(lo)?, ends(hi)?);
    let bond = &seq.bonds[n - 1];
    let lifted = lo_ends.iter().all(|y| hi_ends.iter().any(|x| bond.apply(x) == y));
    Ok(lifted)
}

/// Family trees up to `cap` vertices that receive no family epimorphism from
/// the last stage.
pub fn uncovered(seq: &InverseSequence, cap: usize) -> Result<Vec<Graph>> {
    let spec = seq.spec();
    let top = Arc::clone(seq.stages.last().expect("nonempty"));
    let roots = spec.rooted.then_some((0, 0));
    let mut out = Vec::new();
    for t in spec.trees_up_to(cap) {
        let hit = enumerate_epis(
            Arc::clone(&top),
            t.clone(),
            &spec.constraints,
            roots,
            &enum_opts(Some(1)),
        )?;
        if hit.is_empty() {
            out.push(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_zero_is_a_point() {
        let seq = build_sequence(&FamilySpec::get(FamilyName::TM), &BuildOptions::new(0, 3)).unwrap();
        assert_eq!(seq.stage_count(), 1);
        assert_eq!(seq.stages[0].n(), 1);
        let r = approximant_report(&seq, 1).unwrap();
        assert_eq!((r.vertices, r.end_vertices, r.ramification_vertices), (1, 1, 0));
        assert_eq!(r.max_fiber_diameter, 0.0);
    }

    #[test]
    fn metric_values() {
        let seq = build_sequence(&FamilySpec::get(FamilyName::TM), &BuildOptions::new(4, 3)).unwrap();
        let last = seq.stage_count();
        let a = Thread::through(&seq, last, 0).unwrap();
        assert_eq!(thread_metric(&seq, &a, &a).unwrap(), 0.0);
        let top = seq.stage(last).unwrap().n();
        for v in 1..top {
            let b = Thread::through(&seq, last, v).unwrap();
            let d = thread_metric(&seq, &a, &b).unwrap();
            let first = a.verts.iter().zip(&b.verts).position(|(x, y)| x != y).unwrap();
            assert_eq!(d, 0.5f64.powi(first as i32 + 1));
        }
        let short = Thread::through(&seq, 2, 0).unwrap();
        assert!(thread_metric(&seq, &a, &short).is_err());
    }

    #[test]
    fn projections_compose_bonds() {
        let seq = build_sequence(&FamilySpec::get(FamilyName::TCE), &BuildOptions::new(3, 3)).unwrap();
        seq.validate().unwrap();
        let p = seq.projection(4, 2).unwrap();
        for v in 0..p.dom().n() {
            assert_eq!(p.apply(v), seq.bonds[1].apply(seq.bonds[2].apply(v)));
        }
    }
}
