//! The full run: reach, partition, reduce, cover, merge, synthesize, verify.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constraint::{constraint_from_overstate, constraint_from_state, Constraint};
use crate::error::{Error, Result};
use crate::io::{state_counts, ConstraintReport};
use crate::merge::{merge_fixpoint, MergeConfig, MergeTrace, StateSets, DEFAULT_SUBSET_CAP};
use crate::monitor::{
    admissibility_check, closed_loop_verify, synthesize, to_matrix, AdmissibilityWarning,
    ControlledNet, VerificationReport,
};
use crate::net::{PetriNet, DEFAULT_STATE_LIMIT};
use crate::overstate::{
    build_cover_table, reduce_to_antichain, select_cover, CoverMethod, CoverTable,
    DEFAULT_EXACT_COVER_THRESHOLD,
};
use crate::partition::{partition, ForbiddenSpec};
use crate::placeset::PlaceSet;

pub const EXIT_VERIFIED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_VERIFIED: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub state_limit: usize,
    /// Node budget of the exact cover search.
    pub exact_cover_threshold: u64,
    pub subset_cap: u64,
    /// Adds deadlocks to the forbidden set on top of the spec.
    pub forbid_deadlocks: bool,
    /// Synthesize from the cover constraints, skipping the merge.
    pub no_merge: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            state_limit: DEFAULT_STATE_LIMIT,
            exact_cover_threshold: DEFAULT_EXACT_COVER_THRESHOLD,
            subset_cap: DEFAULT_SUBSET_CAP,
            forbid_deadlocks: false,
            no_merge: false,
        }
    }
}

/// Result of the reduction stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    /// Minimal separating over-states, the rows of the table.
    pub candidates: Vec<Vec<String>>,
    pub table_csv: String,
    pub essential: Vec<Vec<String>>,
    pub selected: Vec<Vec<String>>,
    pub method: CoverMethod,
    pub search_nodes: u64,
    pub constraints: Vec<ConstraintReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub constraints: Vec<ConstraintReport>,
    pub trace: MergeTrace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlPlaceReport {
    pub id: String,
    pub wc_row: Vec<i64>,
    pub initial_tokens: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintReport>,
}

impl ControlPlaceReport {
    pub fn list(cn: &ControlledNet) -> Vec<Self> {
        cn.control_places
            .iter()
            .map(|c| ControlPlaceReport {
                id: c.id.clone(),
                wc_row: c.wc_row.clone(),
                initial_tokens: c.initial_tokens,
                constraint: c
                    .source()
                    .map(|s| ConstraintReport::new(&s, cn.base.places())),
            })
            .collect()
    }
}

/// [`VerificationReport`] with place ids instead of indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationDoc {
    pub maximal_permissive: bool,
    pub invariant_holds: bool,
    pub controlled_states: usize,
    pub reached: Vec<Vec<String>>,
    pub missing: Vec<Vec<String>>,
    pub extra: Vec<Vec<String>>,
}

impl VerificationDoc {
    pub fn new(r: &VerificationReport, names: &[String]) -> Self {
        let conv = |v: &[PlaceSet]| v.iter().map(|s| s.ids(names)).collect();
        VerificationDoc {
            maximal_permissive: r.maximal_permissive,
            invariant_holds: r.invariant_holds,
            controlled_states: r.controlled_states,
            reached: conv(&r.reached),
            missing: conv(&r.missing),
            extra: conv(&r.extra),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.maximal_permissive && self.invariant_holds {
            EXIT_VERIFIED
        } else {
            EXIT_NOT_VERIFIED
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        ErrorReport {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    /// Completed stages in execution order.
    pub stages: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_constraints: Option<Vec<ConstraintReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge: Option<MergeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_places: Option<Vec<ControlPlaceReport>>,
    pub admissibility: Vec<AdmissibilityWarning>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
    pub exit_code: i32,
    /// Microseconds per stage; the only nondeterministic field.
    pub timing_us: BTreeMap<String, u64>,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: PipelineReport,
    /// Every constraint set produced, for callers that check them.
    pub raw: Vec<Constraint>,
    pub cover: Vec<Constraint>,
    pub merged: Option<Vec<Constraint>>,
    pub controlled: Option<ControlledNet>,
}

/// Over-state reduction and cover selection on plain state sets.
pub fn reduce_sets(
    names: &[String],
    authorized: &[PlaceSet],
    border: &[PlaceSet],
    candidates: Option<&[PlaceSet]>,
    exact_cover_threshold: u64,
) -> Result<(CoverReport, CoverTable, Vec<Constraint>)> {
    let rows = match candidates {
        Some(c) => c.to_vec(),
        None => reduce_to_antichain(border, authorized)?,
    };
    let table = build_cover_table(&rows, border);
    let sel = select_cover(&table, exact_cover_threshold)?;
    let chosen = sel.overstates(&table);
    let constraints: Vec<Constraint> = chosen
        .iter()
        .map(|s| constraint_from_overstate(names.len(), s))
        .collect();
    let ids = |v: &[PlaceSet]| v.iter().map(|s| s.ids(names)).collect();
    let essential: Vec<PlaceSet> = sel
        .essential
        .iter()
        .map(|&i| table.rows[i].clone())
        .collect();
    let report = CoverReport {
        candidates: ids(&rows),
        table_csv: table.to_csv(names)?,
        essential: ids(&essential),
        selected: ids(&chosen),
        method: sel.method,
        search_nodes: sel.nodes,
        constraints: ConstraintReport::list(&constraints, names),
    };
    Ok((report, table, constraints))
}

struct Timer(Instant);

impl Timer {
    fn lap(&mut self, report: &mut PipelineReport, stage: &str) {
        let now = Instant::now();
        let us = u64::try_from((now - self.0).as_micros()).unwrap_or(u64::MAX);
        report.timing_us.insert(stage.to_string(), us);
        report.stages.push(stage.to_string());
        self.0 = now;
    }
}

pub fn run_pipeline(net: &PetriNet, spec: &ForbiddenSpec, config: &PipelineConfig) -> PipelineRun {
    let mut run = PipelineRun {
        report: PipelineReport::default(),
        raw: Vec::new(),
        cover: Vec::new(),
        merged: None,
        controlled: None,
    };
    match stages(net, spec, config, &mut run) {
        Ok(()) => {
            run.report.exit_code = run
                .report
                .verification
                .as_ref()
                .map_or(EXIT_ERROR, VerificationDoc::exit_code);
        }
        Err(e) => {
            run.report.error = Some(ErrorReport::from(&e));
            run.report.exit_code = EXIT_ERROR;
        }
    }
    run
}

fn stages(
    net: &PetriNet,
    spec: &ForbiddenSpec,
    config: &PipelineConfig,
    run: &mut PipelineRun,
) -> Result<()> {
    let names = net.places();
    let report = &mut run.report;
    let mut timer = Timer(Instant::now());

    let graph = net.reach(config.state_limit)?;
    report.counts.insert("reachable".into(), graph.len());
    timer.lap(report, "reach");

    let mut spec = spec.clone();
    spec.forbid_deadlocks |= config.forbid_deadlocks;
    let part = partition(net, &graph, &spec)?;
    report.counts = state_counts(&graph, &part);
    timer.lap(report, "partition");

    let authorized = part.authorized_supports(&graph);
    let border = part.border_supports(&graph);
    let interior = part.interior_supports(&graph);
    run.raw = part
        .border
        .iter()
        .map(|&i| constraint_from_state(&graph.states()[i]))
        .collect::<Result<_>>()?;
    report.raw_constraints = Some(ConstraintReport::list(&run.raw, names));
    timer.lap(report, "raw");

    let (cover, _, cover_constraints) = reduce_sets(
        names,
        &authorized,
        &border,
        None,
        config.exact_cover_threshold,
    )?;
    if cover.method == CoverMethod::Greedy {
        report
            .warnings
            .push("cover search budget exhausted; the cover may not be minimum".into());
    }
    report.cover = Some(cover);
    run.cover = cover_constraints;
    timer.lap(report, "cover");

    let final_set = if config.no_merge {
        run.cover.clone()
    } else {
        let states = StateSets {
            authorized: &authorized,
            border: &border,
            other: &interior,
        };
        let merge_config = MergeConfig {
            subset_cap: config.subset_cap,
        };
        let (merged, trace) = merge_fixpoint(&run.cover, states, merge_config)?;
        report.merge = Some(MergeReport {
            constraints: ConstraintReport::list(&merged, names),
            trace,
        });
        run.merged = Some(merged.clone());
        timer.lap(report, "merge");
        merged
    };

    let cn = synthesize(net, &to_matrix(&final_set, net)?)?;
    report.control_places = Some(ControlPlaceReport::list(&cn));
    report.admissibility = admissibility_check(&cn);
    for w in &report.admissibility {
        report.warnings.push(format!(
            "control place {} feeds uncontrollable transition {}",
            w.control_place, w.transition
        ));
    }
    timer.lap(report, "synthesize");

    let expected: BTreeSet<PlaceSet> = authorized.into_iter().collect();
    let v = closed_loop_verify(&cn, &expected, config.state_limit)?;
    report.verification = Some(VerificationDoc::new(&v, names));
    run.controlled = Some(cn);
    timer.lap(report, "verify");
    Ok(())
}
