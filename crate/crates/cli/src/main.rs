//! `fraisse`: command-line front end.
//!
//! Exit status: 0 when the command ran and every reported property holds,
//! 1 when it ran but a property is false or a construction failed, 2 for
//! bad invocations and unreadable or malformed input.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fraisse_core::amalgamation::{amalgamate, Strategy};
use fraisse_core::canon::{enumerate_rooted_trees, enumerate_trees};
use fraisse_core::dot::{export_dot, DotOptions};
use fraisse_core::families::{
    amalgamation_suite, hypothesis_no_isolated_ends, hypothesis_transitive, FamilyName, FamilySpec,
};
use fraisse_core::io;
use fraisse_core::limits::{approximant_report, build_sequence, BuildOptions};
use fraisse_core::morphisms::{enumerate_epis, EnumOptions};
use fraisse_core::{suites, Constraints, Error, Property};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "fraisse",
    version,
    about = "Trees, epimorphisms and amalgamation at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run property checkers on a map.
    Check {
        /// Map JSON file.
        #[arg(long)]
        map: PathBuf,
        /// Property name such as monotone or end-preserving; repeatable.
        #[arg(long = "property", required = true)]
        properties: Vec<String>,
    },
    /// Amalgamate two maps with a common codomain.
    Amalgamate(AmalgamateArgs),
    /// Monotone-light factorization of an epimorphism.
    Factorize {
        /// Map JSON file.
        #[arg(long)]
        map: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List trees up to isomorphism or epimorphisms between two graphs.
    Enumerate {
        #[command(subcommand)]
        what: EnumerateWhat,
    },
    /// Build a fundamental sequence for a family.
    BuildLimit {
        /// TM, TM3, TC, TCE, TE or FE.
        #[arg(long)]
        family: FamilyName,
        /// Number of bonds.
        #[arg(long)]
        depth: usize,
        /// Largest tree size used in coverage and factorization tasks.
        #[arg(long, default_value_t = 3)]
        cap: usize,
        /// Amalgamations above this size are deferred.
        #[arg(long, env = "FRAISSE_STAGE_BUDGET", default_value_t = 256)]
        stage_budget: usize,
        /// Maps from each new stage scheduled per target tree.
        #[arg(long, default_value_t = 2)]
        maps_per_target: usize,
        /// Also schedule edge subdivisions of every new stage.
        #[arg(long)]
        separation: bool,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stage statistics of a stored sequence.
    Report {
        /// Sequence JSON file from build-limit.
        #[arg(long)]
        seq: PathBuf,
        /// Stage number, counted from 1.
        #[arg(long)]
        stage: usize,
    },
    /// Run an exhaustive suite or re-verify fixture files.
    Verify(VerifyArgs),
    /// Write a graph, or a stage of a stored sequence, as DOT or JSON.
    Export {
        /// Graph JSON file.
        #[arg(long, conflicts_with = "seq", required_unless_present = "seq")]
        graph: Option<PathBuf>,
        /// Sequence JSON file; needs `--stage`.
        #[arg(long, requires = "stage")]
        seq: Option<PathBuf>,
        /// Stage number, counted from 1.
        #[arg(long)]
        stage: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        /// Plain DOT without shapes or fills.
        #[arg(long)]
        plain: bool,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AmalgamateArgs {
    /// Map JSON file for f: B -> A.
    #[arg(long)]
    f: PathBuf,
    /// Map JSON file for g: C -> A.
    #[arg(long)]
    g: PathBuf,
    /// Use a family's amalgamator and certify inside the family.
    #[arg(long, conflicts_with = "strategy")]
    family: Option<FamilyName>,
    /// tree (default), pullback, component, monotone, monotone-rooted,
    /// confluent, end-preserving, fan or search.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Constraints for `--strategy search`, comma separated.
    #[arg(long, default_value = "")]
    constraints: String,
    /// Largest amalgamation accepted (unbounded by default) and the search
    /// cap (8 by default).
    #[arg(long, env = "FRAISSE_MAX_VERTS")]
    max_verts: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EnumerateWhat {
    /// Trees with exactly `n` vertices (rooted at 0 with `--rooted`).
    Trees {
        /// Vertex count.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rooted: bool,
    },
    /// Epimorphisms between two graph files.
    Maps {
        /// Domain graph JSON file.
        #[arg(long)]
        dom: PathBuf,
        /// Codomain graph JSON file.
        #[arg(long)]
        cod: PathBuf,
        /// Comma-separated property names every listed map must satisfy.
        #[arg(long, default_value = "")]
        constraints: String,
        /// `ROOT_DOM,ROOT_COD`; defaults to the files' roots.
        #[arg(long, value_parser = parse_pair)]
        roots: Option<(usize, usize)>,
        /// Stop after this many maps.
        #[arg(long)]
        limit: Option<usize>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Fixture files to re-verify; suites are not run when given.
    #[arg(long = "fixture", num_args = 1.., conflicts_with_all = ["family", "suite"])]
    fixtures: Vec<PathBuf>,
    /// Family for the amalgamation, transitive and ends suites.
    #[arg(long)]
    family: Option<FamilyName>,
    #[arg(long, value_enum, required_unless_present = "fixtures")]
    suite: Option<Suite>,
    /// Largest tree size in the suite.
    #[arg(long, default_value_t = 5)]
    cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Amalgamation,
    Transitive,
    Ends,
    PullbackPropagation,
    Factorization,
    MonotoneArc,
    EndLifting,
    Tm3Cofinality,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated vertices")?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

/// Outcome of a command that ran.
type Outcome = Result<bool, Error>;

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => io::write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text(v: &serde_json::Value) -> String {
    io::to_pretty(v)
}

fn check(map: &PathBuf, properties: &[String]) -> Outcome {
    let m = io::map_from_str(&io::read_text(map)?)?;
    let props = properties
        .iter()
        .map(|p| p.parse::<Property>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut reports = Vec::new();
    for p in props {
        match m.check(p) {
            Ok(r) => reports.push(serde_json::to_value(&r).expect("report serializes")),
            // Class checkers refuse non-epimorphisms; report that as a false verdict.
            Err(e @ (Error::NotEpimorphism | Error::NotRooted)) => {
                reports.push(json!({"property": p.as_str(), "verdict": false, "error": e.to_string()}))
            }
            Err(e) => return Err(e),
        }
    }
    let all = reports.iter().all(|r| r["verdict"] == json!(true));
    emit(None, &json_text(&json!(reports)))?;
    Ok(all)
}

fn amalgamate_cmd(a: &AmalgamateArgs) -> Outcome {
    let f = io::map_from_str(&io::read_text(&a.f)?)?;
    let g = io::map_from_str(&io::read_text(&a.g)?)?;
    let (result, accepted) = if let Some(name) = a.family {
        let spec = FamilySpec::get(name);
        let max = a.max_verts.unwrap_or(usize::MAX);
        match spec.amalgamate_within(&f, &g, max)? {
            Some(r) => {
                let ok = spec.accepts(&r);
                (r, ok)
            }
            None => {
                return Err(Error::ConstructionFailed(format!(
                    "every certified amalgamation exceeds {max} vertices"
                )))
            }
        }
    } else {
        let strategy = a.strategy.unwrap_or(Strategy::Tree);
        let c = Constraints::parse_list(&a.constraints)?;
        let r = amalgamate(strategy, &f, &g, Some((&c, a.max_verts.unwrap_or(8))))?;
        let ok = r.passes(&c) && a.max_verts.is_none_or(|m| r.d.n() <= m);
        (r, ok)
    };
    emit(a.out.as_ref(), &io::amalgamation_to_string(&result))?;
    Ok(accepted)
}

fn enumerate_cmd(what: &EnumerateWhat) -> Outcome {
    match what {
        EnumerateWhat::Trees { n, rooted } => {
            let trees = if *rooted {
                enumerate_rooted_trees(*n)
            } else {
                enumerate_trees(*n)
            };
            let root = rooted.then_some(0);
            let list: Vec<_> = trees.iter().map(|t| io::graph_to_json(t, root)).collect();
            emit(None, &io::to_pretty(&list))?;
        }
        EnumerateWhat::Maps {
            dom,
            cod,
            constraints,
            roots,
            limit,
        } => {
            let (d, rd) = io::graph_from_str(&io::read_text(dom)?)?;
            let (c, rc) = io::graph_from_str(&io::read_text(cod)?)?;
            let roots = roots.or(rd.zip(rc));
            let opts = EnumOptions {
                limit: *limit,
                ..EnumOptions::default()
            };
            let cons = Constraints::parse_list(constraints)?;
            let maps = enumerate_epis(Arc::new(d), Arc::new(c), &cons, roots, &opts)?;
            let assigns: Vec<_> = maps.iter().map(|m| m.assign().to_vec()).collect();
            emit(
                None,
                &json_text(&json!({"count": assigns.len(), "assignments": assigns})),
            )?;
        }
    }
    Ok(true)
}

fn verify_cmd(v: &VerifyArgs) -> Outcome {
    if !v.fixtures.is_empty() {
        let mut rows = Vec::new();
        for p in &v.fixtures {
            let fx = io::load_fixture(p)?;
            rows.push(json!({"fixture": fx.name, "verified": io::verify_fixture(&fx)?}));
        }
        let all = rows.iter().all(|r| r["verified"] == json!(true));
        emit(None, &json_text(&json!(rows)))?;
        return Ok(all);
    }
    let suite = v.suite.expect("clap requires a suite here");
    let family = || {
        v.family
            .map(FamilySpec::get)
            .ok_or_else(|| Error::InvalidInput("this suite needs --family".into()))
    };
    let (text, passed) = match suite {
        Suite::Amalgamation | Suite::Transitive | Suite::Ends => {
            let spec = family()?;
            let r = match suite {
                Suite::Amalgamation => amalgamation_suite(&spec, v.cap)?,
                Suite::Transitive => hypothesis_transitive(&spec, v.cap)?,
                _ => hypothesis_no_isolated_ends(&spec, v.cap)?,
            };
            (io::to_pretty(&r), r.passed)
        }
        other => {
            let r = match other {
                Suite::PullbackPropagation => suites::pullback_propagation(v.cap)?,
                Suite::Factorization => suites::factorization(v.cap)?,
                Suite::MonotoneArc => suites::monotone_arcs(v.cap)?,
                Suite::EndLifting => suites::end_lifting(v.cap)?,
                _ => suites::tm3_cofinality(v.cap)?,
            };
            (io::to_pretty(&r), r.passed)
        }
    };
    emit(None, &text)?;
    Ok(passed)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check { map, properties } => check(&map, &properties),
        Command::Amalgamate(a) => amalgamate_cmd(&a),
        Command::Factorize { map, out } => {
            let m = io::map_from_str(&io::read_text(&map)?)?;
            let fac = fraisse_core::factorization::ml_factorize(&m)?;
            emit(out.as_ref(), &io::factorization_to_string(&fac))?;
            Ok(true)
        }
        Command::Enumerate { what } => enumerate_cmd(&what),
        Command::BuildLimit {
            family,
            depth,
            cap,
            stage_budget,
            maps_per_target,
            separation,
            out,
        } => {
            let opts = BuildOptions {
                stage_vertex_budget: stage_budget,
                maps_per_target,
                separation_tasks: separation,
                ..BuildOptions::new(depth, cap)
            };
            let seq = build_sequence(&FamilySpec::get(family), &opts)?;
            emit(out.as_ref(), &io::sequence_to_string(&seq))?;
            Ok(true)
        }
        Command::Report { seq, stage } => {
            let seq = io::sequence_from_str(&io::read_text(&seq)?)?;
            let r = approximant_report(&seq, stage)?;
            emit(None, &io::to_pretty(&io::report_to_json(&r)))?;
            Ok(true)
        }
        Command::Verify(v) => verify_cmd(&v),
        Command::Export {
            graph,
            seq,
            stage,
            format,
            plain,
            out,
        } => {
            let (g, root, name) = match (graph, seq) {
                (Some(p), _) => {
                    let (g, root) = io::graph_from_str(&io::read_text(&p)?)?;
                    (Arc::new(g), root, "G".to_string())
                }
                (None, Some(p)) => {
                    let seq = io::sequence_from_str(&io::read_text(&p)?)?;
                    let n = stage.expect("clap requires --stage with --seq");
                    (Arc::clone(seq.stage(n)?), seq.root(), format!("F{n}"))
                }
                (None, None) => unreachable!("clap requires a source"),
            };
            let text = match format {
                Format::Dot => export_dot(
                    &g,
                    &DotOptions {
                        name,
                        styled: !plain,
                        root,
                    },
                ),
                Format::Json => io::graph_to_string(&g, root),
            };
            emit(out.as_ref(), &text)?;
            Ok(true)
        }
    }
}

fn usage_error(e: &Error) -> bool {
    matches!(e, Error::Schema { .. } | Error::Io(_) | Error::InvalidInput(_))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
