//! `pnsup`: forbidden-state supervisor synthesis for safe Petri nets.
//!
//! Exit codes: 0 verified maximally permissive, 2 verified false,
//! 1 operational error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pnsup_core::io::{
    load_constraints, load_controlled, load_net, load_spec, save_controlled, ConstraintReport,
    GraphDocument, NetDocument, PartitionDocument, SetsDocument, StateSetsOwned,
};
use pnsup_core::merge::{merge_fixpoint, MergeConfig, StateSets, DEFAULT_SUBSET_CAP};
use pnsup_core::monitor::{admissibility_check, closed_loop_verify, synthesize, to_matrix};
use pnsup_core::net::DEFAULT_STATE_LIMIT;
use pnsup_core::overstate::DEFAULT_EXACT_COVER_THRESHOLD;
use pnsup_core::partition::partition;
use pnsup_core::pipeline::{
    reduce_sets, run_pipeline, ControlPlaceReport, ErrorReport, MergeReport, PipelineConfig,
    VerificationDoc, EXIT_ERROR, EXIT_VERIFIED,
};
use pnsup_core::{dot, Constraint, Error, ForbiddenSpec, PetriNet, Result};

#[derive(Parser)]
#[command(
    name = "pnsup",
    version,
    about = "Forbidden-state supervisors for safe Petri nets"
)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// Maximum number of states to explore.
    #[arg(long, global = true, env = "PNSUP_STATE_LIMIT", default_value_t = DEFAULT_STATE_LIMIT)]
    state_limit: usize,
    /// Node budget of the exact cover search before falling back to greedy.
    #[arg(long, global = true, default_value_t = DEFAULT_EXACT_COVER_THRESHOLD)]
    exact_cover_threshold: u64,
    /// Largest subset enumeration allowed for one rule P5 merge check.
    #[arg(long, global = true, default_value_t = DEFAULT_SUBSET_CAP)]
    subset_cap: u64,
    /// Also forbid reachable deadlocks.
    #[arg(long, global = true)]
    forbid_deadlocks: bool,
    /// Stop after the cover stage.
    #[arg(long, global = true)]
    no_merge: bool,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reachability graph of a net.
    Reach { net: PathBuf },
    /// Authorized, forbidden and border states.
    Partition { net: PathBuf, spec: PathBuf },
    /// Separating over-states and their cover constraints.
    Reduce(Source),
    /// Cover constraints merged into fewer, weaker-looking ones.
    Merge {
        #[command(flatten)]
        source: Source,
        /// Start from these constraints instead of reducing first.
        #[arg(long)]
        constraints: Option<PathBuf>,
    },
    /// Monitor places for a list of constraints; prints the controlled net.
    Synth { net: PathBuf, constraints: PathBuf },
    /// Closed-loop check of a controlled net against a spec.
    Verify { controlled: PathBuf, spec: PathBuf },
    /// All stages in order; prints the report.
    Pipeline {
        net: PathBuf,
        spec: PathBuf,
        /// Also write the controlled net here.
        #[arg(long)]
        controlled: Option<PathBuf>,
    },
    /// Graphviz for a net, a controlled net, or (with --reach) its state graph.
    ExportDot {
        net: PathBuf,
        #[arg(long)]
        reach: bool,
    },
}

#[derive(Args)]
struct Source {
    /// A net; needs a spec.
    net: Option<PathBuf>,
    spec: Option<PathBuf>,
    /// A state-sets document instead of a net and spec.
    #[arg(long, conflicts_with_all = ["net", "spec"])]
    sets: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(opts: &Opts, text: &str) -> Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &opts.out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn net_and_spec(net: &Path, spec: &Path, opts: &Opts) -> Result<(PetriNet, ForbiddenSpec)> {
    let net = load_net(&read(net)?)?;
    let mut spec = load_spec(&read(spec)?, &net)?;
    spec.forbid_deadlocks |= opts.forbid_deadlocks;
    Ok((net, spec))
}

/// State sets from either a sets document or a net and spec.
fn state_sets(src: &Source, opts: &Opts) -> Result<StateSetsOwned> {
    if let Some(p) = &src.sets {
        return SetsDocument::parse(&read(p)?)?.resolve();
    }
    let (Some(net), Some(spec)) = (&src.net, &src.spec) else {
        return Err(Error::Precondition(
            "give a net and a spec, or --sets".into(),
        ));
    };
    let (net, spec) = net_and_spec(net, spec, opts)?;
    let g = net.reach(opts.state_limit)?;
    let part = partition(&net, &g, &spec)?;
    PartitionDocument::new(&net, &g, &part).resolve(net.places())
}

fn run(cli: &Cli) -> Result<i32> {
    let opts = &cli.opts;
    match &cli.cmd {
        Cmd::Reach { net } => {
            let net = load_net(&read(net)?)?;
            let g = net.reach(opts.state_limit)?;
            emit(opts, &pretty(&GraphDocument::new(&net, &g)))?;
        }
        Cmd::Partition { net, spec } => {
            let (net, spec) = net_and_spec(net, spec, opts)?;
            let g = net.reach(opts.state_limit)?;
            let part = partition(&net, &g, &spec)?;
            emit(opts, &pretty(&PartitionDocument::new(&net, &g, &part)))?;
        }
        Cmd::Reduce(src) => {
            let s = state_sets(src, opts)?;
            let (report, _, _) = reduce_sets(
                &s.places,
                &s.authorized,
                &s.border,
                s.candidates.as_deref(),
                opts.exact_cover_threshold,
            )?;
            emit(opts, &pretty(&report))?;
        }
        Cmd::Merge {
            source,
            constraints,
        } => {
            let s = state_sets(source, opts)?;
            let start: Vec<Constraint> = match constraints {
                Some(p) => load_constraints(&read(p)?, &s.places)?,
                None => {
                    reduce_sets(
                        &s.places,
                        &s.authorized,
                        &s.border,
                        s.candidates.as_deref(),
                        opts.exact_cover_threshold,
                    )?
                    .2
                }
            };
            let states = StateSets {
                authorized: &s.authorized,
                border: &s.border,
                other: &s.other,
            };
            let config = MergeConfig {
                subset_cap: opts.subset_cap,
            };
            let (merged, trace) = merge_fixpoint(&start, states, config)?;
            let report = MergeReport {
                constraints: ConstraintReport::list(&merged, &s.places),
                trace,
            };
            emit(opts, &pretty(&report))?;
        }
        Cmd::Synth { net, constraints } => {
            let net = load_net(&read(net)?)?;
            let cs = load_constraints(&read(constraints)?, net.places())?;
            let cn = synthesize(&net, &to_matrix(&cs, &net)?)?;
            for w in admissibility_check(&cn) {
                eprintln!(
                    "warning: control place {} feeds uncontrollable transition {}",
                    w.control_place, w.transition
                );
            }
            emit(opts, &save_controlled(&cn))?;
        }
        Cmd::Verify { controlled, spec } => {
            let cn = load_controlled(&read(controlled)?)?;
            let mut spec = load_spec(&read(spec)?, &cn.base)?;
            spec.forbid_deadlocks |= opts.forbid_deadlocks;
            let g = cn.base.reach(opts.state_limit)?;
            let part = partition(&cn.base, &g, &spec)?;
            let expected: BTreeSet<_> = part.authorized_supports(&g).into_iter().collect();
            let report = closed_loop_verify(&cn, &expected, opts.state_limit)?;
            let doc = VerificationDoc::new(&report, cn.base.places());
            let out = json!({
                "verification": doc,
                "control_places": ControlPlaceReport::list(&cn),
                "admissibility": admissibility_check(&cn),
            });
            emit(opts, &pretty(&out))?;
            return Ok(doc.exit_code());
        }
        Cmd::Pipeline {
            net,
            spec,
            controlled,
        } => {
            let net = load_net(&read(net)?)?;
            let spec = load_spec(&read(spec)?, &net)?;
            let config = PipelineConfig {
                state_limit: opts.state_limit,
                exact_cover_threshold: opts.exact_cover_threshold,
                subset_cap: opts.subset_cap,
                forbid_deadlocks: opts.forbid_deadlocks,
                no_merge: opts.no_merge,
            };
            let run = run_pipeline(&net, &spec, &config);
            emit(opts, &run.report.to_json())?;
            if let (Some(path), Some(cn)) = (controlled, &run.controlled) {
                fs::write(path, save_controlled(cn) + "\n")
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            if let Some(e) = &run.report.error {
                eprintln!("error ({}): {}", e.kind, e.message);
            }
            return Ok(run.report.exit_code);
        }
        Cmd::ExportDot { net, reach } => {
            let doc = NetDocument::parse(&read(net)?)?;
            let text = if *reach {
                let net = doc.into_net()?;
                dot::graph_to_dot(&net, &net.reach(opts.state_limit)?)
            } else if doc.places.iter().any(|p| p.monitor == Some(true)) {
                dot::controlled_to_dot(&doc.into_controlled()?)
            } else {
                dot::net_to_dot(&doc.into_net()?)
            };
            emit(opts, &text)?;
        }
    }
    Ok(EXIT_VERIFIED)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as "verified false"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let report = json!({ "error": ErrorReport::from(&e) });
            eprintln!("{}", pretty(&report));
            EXIT_ERROR
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
