//! End-to-end runs: leakage paths, cover properties, assumptions for a
//! verification mode, parallel checking, and reports that point covered
//! paths back at program lines.

mod attribute;
mod config;
mod report;

pub use attribute::{attribute_witness, fetch_stream, Attribution};
pub use config::{load_design, load_inputs, run_config, ConfigError, RunConfig};
pub use report::{compare_modes, AuditStep, CompareError, ModeAudit, Record, Report, StageRecord, Summary, VerdictKind};

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hdl::FlatNetlist;
use crate::ifa::{enumerate_paths, EdgeGraph, Labels, LeakagePath, Limits};
use crate::mc::{check_cover, compile_ts, explicit_cover, CheckOptions, CheckReport, ExplicitLimits, Method, Verdict};
use crate::property::{path_property, split_blocks, Property};
use crate::software::{generate, AssumptionSet, CoreInterface, Mode, ProgramImage};

/// A verification mode, or `Full`: Used, then Jumps, then Stack for every
/// property that is not yet proven uncoverable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    None,
    Legal,
    Used,
    Jumps,
    Stack,
    Full,
}

impl RunMode {
    pub const ALL: [RunMode; 6] = [
        RunMode::None,
        RunMode::Legal,
        RunMode::Used,
        RunMode::Jumps,
        RunMode::Stack,
        RunMode::Full,
    ];

    /// Modes tried in order.
    pub fn stages(self) -> Vec<Mode> {
        match self {
            RunMode::None => vec![Mode::None],
            RunMode::Legal => vec![Mode::Legal],
            RunMode::Used => vec![Mode::Used],
            RunMode::Jumps => vec![Mode::Jumps],
            RunMode::Stack => vec![Mode::Stack],
            RunMode::Full => vec![Mode::Used, Mode::Jumps, Mode::Stack],
        }
    }

    pub fn single(self) -> Option<Mode> {
        match self.stages().as_slice() {
            [m] => Some(*m),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RunMode::Full => "full",
            m => m.single().expect("single stage").name(),
        }
    }
}

impl From<Mode> for RunMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::None => RunMode::None,
            Mode::Legal => RunMode::Legal,
            Mode::Used => RunMode::Used,
            Mode::Jumps => RunMode::Jumps,
            Mode::Stack => RunMode::Stack,
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RunMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunLimits {
    pub max_paths: usize,
    pub max_edges: usize,
    /// Deepest BMC frame; derived from the paths when absent.
    pub max_k: Option<usize>,
    /// Cycles one instruction spends in the core; scales the derived bound.
    pub pipeline_depth: usize,
    /// When set, the explicit-state oracle re-checks every property of a
    /// design within these limits and decides those the SAT checks leave
    /// open.
    pub explicit: Option<ExplicitLimits>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub conflict_budget: Option<u64>,
}

impl Default for RunLimits {
    fn default() -> Self {
        let l = Limits::default();
        RunLimits {
            max_paths: l.max_paths,
            max_edges: l.max_edges,
            max_k: None,
            pipeline_depth: 1,
            explicit: None,
            jobs: 0,
            conflict_budget: None,
        }
    }
}

impl RunLimits {
    /// Two traversals of the longest path's blocks, per pipeline stage.
    pub fn derived_max_k(&self, paths: &[LeakagePath]) -> usize {
        let blocks = paths.iter().map(|p| split_blocks(p).len()).max().unwrap_or(1);
        self.max_k
            .unwrap_or(2 * blocks * self.pipeline_depth.max(1))
    }
}

/// Everything a run reads, already parsed.
#[derive(Clone, Debug)]
pub struct RunInputs {
    pub netlist: FlatNetlist,
    pub labels: Labels,
    pub interface: Option<CoreInterface>,
    pub program: Option<ProgramImage>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub mode: RunMode,
    pub limits: RunLimits,
    /// Entries of the return-address stack in mode Stack; the program's
    /// call depth when absent.
    pub stack_depth: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            mode: RunMode::Full,
            limits: RunLimits::default(),
            stack_depth: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Load,
    Paths,
    Properties,
    Assumptions,
    Check,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Paths => "paths",
            Stage::Properties => "properties",
            Stage::Assumptions => "assumptions",
            Stage::Check => "check",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
#[error("[{stage}] {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        PipelineError {
            stage,
            message: message.to_string(),
        }
    }
}

/// A failed run, with whatever was finished before the failure.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct Failure {
    pub error: PipelineError,
    pub partial: Option<Report>,
}

impl From<PipelineError> for Failure {
    fn from(error: PipelineError) -> Self {
        Failure { error, partial: None }
    }
}

/// Hex digest of the program words, used to match reports.
pub fn program_digest(p: &ProgramImage) -> String {
    let digest = Sha256::digest(p.to_hex().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Leakage paths of the design and their cover properties.
pub fn paths_and_properties(inputs: &RunInputs, limits: &RunLimits) -> (crate::ifa::PathSet, Vec<Property>) {
    let graph = EdgeGraph::build(&inputs.netlist);
    let set = enumerate_paths(
        &inputs.netlist,
        &graph,
        &inputs.labels,
        Limits {
            max_paths: limits.max_paths,
            max_edges: limits.max_edges,
        },
    );
    let props = set
        .paths
        .iter()
        .map(|p| path_property(&inputs.netlist, p))
        .collect();
    (set, props)
}

/// Assumption set for one mode.
pub fn assumptions_for(inputs: &RunInputs, mode: Mode, stack_depth: Option<usize>) -> Result<AssumptionSet, PipelineError> {
    if mode == Mode::None {
        return Ok(AssumptionSet::empty(Mode::None));
    }
    let iface = inputs
        .interface
        .as_ref()
        .ok_or_else(|| PipelineError::new(Stage::Assumptions, format!("mode {mode} needs a core interface file")))?;
    generate(mode, &inputs.netlist, iface, inputs.program.as_ref(), stack_depth)
        .map_err(|e| PipelineError::new(Stage::Assumptions, e))
}

struct StageOutcome {
    report: CheckReport,
    mode: Mode,
}

fn check_one(design: &FlatNetlist, set: &AssumptionSet, base: &crate::mc::TransitionSystem, prop: &Property, limits: &RunLimits, opts: &CheckOptions) -> Result<CheckReport, PipelineError> {
    let mut r = check_cover(design, base, prop, opts);
    let Some(ex) = limits.explicit else {
        return Ok(r);
    };
    let Ok(o) = explicit_cover(design, &set.invariants(), prop, ex) else {
        return Ok(r);
    };
    match &r.verdict {
        Verdict::Covered { .. } if !o.covered => Err(PipelineError::new(
            Stage::Check,
            format!("{}: witness found but the explicit-state search finds no match", prop.name),
        )),
        Verdict::Uncoverable { .. } if o.covered => Err(PipelineError::new(
            Stage::Check,
            format!("{}: proven uncoverable but the explicit-state search finds a match", prop.name),
        )),
        Verdict::Unknown { .. } if !o.covered => {
            r.verdict = Verdict::Uncoverable {
                method: Method::ExplicitState,
                depth: o.states,
            };
            Ok(r)
        }
        _ => Ok(r),
    }
}

/// Runs every stage of `settings.mode` and assembles the report.
pub fn run(inputs: &RunInputs, settings: &Settings) -> Result<Report, Failure> {
    let start = Instant::now();
    let limits = &settings.limits;
    let (pathset, props) = paths_and_properties(inputs, limits);
    let max_k = limits.derived_max_k(&pathset.paths);
    let opts = CheckOptions {
        max_k,
        conflict_budget: limits.conflict_budget,
        ..CheckOptions::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(limits.jobs)
        .build()
        .map_err(|e| PipelineError::new(Stage::Check, e))?;

    let mut report = Report::new(inputs, settings.mode, max_k, &pathset, &props);
    // per property: stages tried so far
    let mut outcomes: Vec<Vec<StageOutcome>> = (0..props.len()).map(|_| Vec::new()).collect();
    let mut sets: BTreeMap<Mode, AssumptionSet> = BTreeMap::new();
    for mode in settings.mode.stages() {
        let pending: Vec<usize> = (0..props.len())
            .filter(|&i| {
                outcomes[i]
                    .last()
                    .map_or(true, |o| !o.report.verdict.is_uncoverable())
            })
            .collect();
        if pending.is_empty() {
            break;
        }
        let set = match assumptions_for(inputs, mode, settings.stack_depth) {
            Ok(s) => s,
            Err(e) => return Err(report.fail(&props, &outcomes_view(&outcomes), &sets, inputs, e, start)),
        };
        let design = set.design(&inputs.netlist);
        let base = match compile_ts(design, &set.invariants()) {
            Ok(b) => b,
            Err(e) => {
                let e = PipelineError::new(Stage::Check, format!("mode {mode}: {e}"));
                return Err(report.fail(&props, &outcomes_view(&outcomes), &sets, inputs, e, start));
            }
        };
        let results: Vec<Result<CheckReport, PipelineError>> = pool.install(|| {
            pending
                .par_iter()
                .map(|&i| check_one(design, &set, &base, &props[i], limits, &opts))
                .collect()
        });
        for (&i, r) in pending.iter().zip(results) {
            match r {
                Ok(report) => outcomes[i].push(StageOutcome { report, mode }),
                Err(e) => {
                    sets.insert(mode, set);
                    return Err(report.fail(&props, &outcomes_view(&outcomes), &sets, inputs, e, start));
                }
            }
        }
        sets.insert(mode, set);
    }
    report.fill(&props, &outcomes_view(&outcomes), &sets, inputs);
    report.finish(start);
    Ok(report)
}

fn outcomes_view(o: &[Vec<StageOutcome>]) -> Vec<Vec<(Mode, &CheckReport)>> {
    o.iter()
        .map(|v| v.iter().map(|s| (s.mode, &s.report)).collect())
        .collect()
}
