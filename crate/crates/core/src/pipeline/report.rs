//! Run reports: one record per property, a summary, and mode comparisons.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::attribute::{attribute_witness, Attribution};
use super::{program_digest, Failure, PipelineError, RunInputs, RunMode, Stage};
use crate::ifa::PathSet;
use crate::mc::{CheckReport, Method, Verdict, Witness};
use crate::property::{Origin, Property};
use crate::software::{AssumptionSet, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Covered,
    Uncoverable,
    Unknown,
}

impl VerdictKind {
    pub fn of(v: &Verdict) -> Self {
        match v {
            Verdict::Covered { .. } => VerdictKind::Covered,
            Verdict::Uncoverable { .. } => VerdictKind::Uncoverable,
            Verdict::Unknown { .. } => VerdictKind::Unknown,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VerdictKind::Covered => "covered",
            VerdictKind::Uncoverable => "uncoverable",
            VerdictKind::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub mode: Mode,
    pub verdict: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    /// Witness length, induction depth, or the exhausted bound.
    pub depth: usize,
    pub sat_queries: u64,
    pub lemmas: usize,
    pub millis: u128,
}

impl StageRecord {
    fn new(mode: Mode, r: &CheckReport) -> Self {
        let (method, depth) = match &r.verdict {
            Verdict::Covered { depth, .. } => (Some(Method::Bmc), *depth),
            Verdict::Uncoverable { method, depth } => (Some(*method), *depth),
            Verdict::Unknown { bound } => (None, *bound),
        };
        StageRecord {
            mode,
            verdict: VerdictKind::of(&r.verdict),
            method,
            depth,
            sat_queries: r.sat_queries,
            lemmas: r.lemmas,
            millis: r.millis,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub property: String,
    pub path: String,
    pub source: String,
    pub sink: String,
    /// Mode of the last stage tried; it decided the verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub verdict: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    pub depth: usize,
    pub sat_queries: u64,
    pub millis: u128,
    pub stages: Vec<StageRecord>,
    /// The witness only exists because the return-address stack overflowed.
    pub overflow: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_file: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub attribution: Vec<Attribution>,
    #[serde(skip)]
    pub witness: Option<Witness>,
}

impl Record {
    /// Distinct mapped program addresses, in first-fetch order.
    pub fn addresses(&self) -> Vec<u32> {
        let mut seen = BTreeSet::new();
        self.attribution
            .iter()
            .filter(|a| a.is_mapped() && seen.insert(a.address))
            .map(|a| a.address)
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub covered: usize,
    pub uncoverable: usize,
    pub unknown: usize,
    /// Counted under `unknown`.
    pub overflow: usize,
    pub sat_queries: u64,
    /// Properties decided in each mode.
    pub decided: BTreeMap<String, usize>,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub design: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub call_depth: Option<usize>,
    pub mode: RunMode,
    pub max_k: usize,
    pub paths_truncated: bool,
    pub incomplete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub summary: Summary,
    pub records: Vec<Record>,
}

impl Report {
    pub(super) fn new(inputs: &RunInputs, mode: RunMode, max_k: usize, paths: &PathSet, props: &[Property]) -> Self {
        let records = paths
            .paths
            .iter()
            .zip(props)
            .map(|(p, prop)| Record {
                property: prop.name.clone(),
                path: p.id.clone(),
                source: p.source.display(&inputs.netlist).to_string(),
                sink: p.sink.display(&inputs.netlist).to_string(),
                mode: None,
                verdict: VerdictKind::Unknown,
                method: None,
                depth: 0,
                sat_queries: 0,
                millis: 0,
                stages: Vec::new(),
                overflow: false,
                witness_file: None,
                attribution: Vec::new(),
                witness: None,
            })
            .collect();
        Report {
            design: inputs.netlist.top.clone(),
            program: inputs.program.as_ref().map(program_digest),
            call_depth: inputs.program.as_ref().and_then(|p| p.call_depth()),
            mode,
            max_k,
            paths_truncated: paths.truncated || paths.depth_limited,
            incomplete: false,
            error: None,
            summary: Summary::default(),
            records,
        }
    }

    pub(super) fn fill(
        &mut self,
        props: &[Property],
        outcomes: &[Vec<(Mode, &CheckReport)>],
        sets: &BTreeMap<Mode, AssumptionSet>,
        inputs: &RunInputs,
    ) {
        for ((rec, prop), stages) in self.records.iter_mut().zip(props).zip(outcomes) {
            debug_assert!(matches!(&prop.origin, Origin::Path(p) if *p == rec.path));
            rec.stages = stages.iter().map(|(m, r)| StageRecord::new(*m, r)).collect();
            rec.sat_queries = rec.stages.iter().map(|s| s.sat_queries).sum();
            rec.millis = rec.stages.iter().map(|s| s.millis).sum();
            let Some((mode, last)) = stages.last() else {
                continue;
            };
            let fin = rec.stages.last().expect("non-empty").clone();
            rec.mode = Some(*mode);
            rec.verdict = fin.verdict;
            rec.method = fin.method;
            rec.depth = fin.depth;
            if let Verdict::Covered { witness, .. } = &last.verdict {
                let set = &sets[mode];
                let design = set.design(&inputs.netlist);
                if let (Some(iface), Some(program)) = (&inputs.interface, &inputs.program) {
                    rec.attribution = attribute_witness(design, iface, witness, program).unwrap_or_default();
                }
                if let Some(ov) = set.aux.as_ref().and_then(|a| a.overflow) {
                    let trace = witness.trace(design, &[ov]).unwrap_or_default();
                    if trace.iter().any(|v| v[0] != 0) {
                        rec.overflow = true;
                        rec.verdict = VerdictKind::Unknown;
                    }
                }
                rec.witness = Some(witness.clone());
            }
        }
    }

    pub(super) fn finish(&mut self, start: Instant) {
        let mut s = Summary {
            total: self.records.len(),
            ..Summary::default()
        };
        for r in &self.records {
            match r.verdict {
                VerdictKind::Covered => s.covered += 1,
                VerdictKind::Uncoverable => s.uncoverable += 1,
                VerdictKind::Unknown => s.unknown += 1,
            }
            s.overflow += usize::from(r.overflow);
            s.sat_queries += r.sat_queries;
            if let Some(m) = r.mode {
                *s.decided.entry(m.name().to_string()).or_default() += 1;
            }
        }
        s.millis = start.elapsed().as_millis();
        self.summary = s;
    }

    pub(super) fn fail(
        &mut self,
        props: &[Property],
        outcomes: &[Vec<(Mode, &CheckReport)>],
        sets: &BTreeMap<Mode, AssumptionSet>,
        inputs: &RunInputs,
        error: PipelineError,
        start: Instant,
    ) -> Failure {
        self.fill(props, outcomes, sets, inputs);
        self.incomplete = true;
        self.error = Some(error.to_string());
        self.finish(start);
        Failure {
            error,
            partial: Some(self.clone()),
        }
    }

    pub fn record(&self, path: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.path == path)
    }

    /// Path ids with the given final verdict.
    pub fn paths_with(&self, v: VerdictKind) -> BTreeSet<String> {
        self.records
            .iter()
            .filter(|r| r.verdict == v)
            .map(|r| r.path.clone())
            .collect()
    }

    /// One JSON object per record.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect()
    }

    /// Human-readable summary table.
    pub fn summary_table(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let row = |out: &mut String, k: &str, v: String| {
            let _ = writeln!(out, "{k:<22} {v:>10}");
        };
        let _ = writeln!(out, "{:<22} {:>10}", "design", self.design);
        row(&mut out, "mode", self.mode.to_string());
        if let Some(d) = self.call_depth {
            row(&mut out, "call depth", d.to_string());
        }
        row(&mut out, "leakage paths", s.total.to_string());
        row(&mut out, "covered", s.covered.to_string());
        row(&mut out, "uncoverable", s.uncoverable.to_string());
        row(&mut out, "unknown", s.unknown.to_string());
        if s.overflow > 0 {
            row(&mut out, "  stack overflow", s.overflow.to_string());
        }
        if self.mode == RunMode::Full {
            for (m, n) in &s.decided {
                row(&mut out, &format!("  decided in {m}"), n.to_string());
            }
        }
        row(&mut out, "max bound", self.max_k.to_string());
        row(&mut out, "sat queries", s.sat_queries.to_string());
        row(&mut out, "time [ms]", s.millis.to_string());
        if self.incomplete {
            let _ = writeln!(out, "INCOMPLETE: {}", self.error.as_deref().unwrap_or("run aborted"));
        }
        let covered: Vec<&Record> = self
            .records
            .iter()
            .filter(|r| r.verdict == VerdictKind::Covered)
            .collect();
        if !covered.is_empty() {
            out.push_str("\ncovered paths:\n");
        }
        for r in covered {
            let _ = writeln!(out, "  {} {} -> {} (depth {})", r.path, r.source, r.sink, r.depth);
            let mut seen = BTreeSet::new();
            for a in r.attribution.iter().filter(|a| a.is_mapped()) {
                if seen.insert(a.address) {
                    let _ = writeln!(
                        out,
                        "    {:#06x}  line {:<4} {}",
                        a.address,
                        a.line.unwrap_or(0),
                        a.text.as_deref().unwrap_or("")
                    );
                }
            }
        }
        out
    }

    /// Writes `records.jsonl`, `summary.json`, `summary.txt` and one
    /// witness table per covered record under `witnesses/`.
    pub fn write(&mut self, dir: &Path) -> Result<(), PipelineError> {
        let io = |e: std::io::Error| PipelineError::new(Stage::Report, format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir.join("witnesses")).map_err(io)?;
        for r in &mut self.records {
            if let (Some(w), Some(m)) = (&r.witness, r.mode) {
                let name = format!("witnesses/{}.{}.txt", r.property, m.name());
                std::fs::write(dir.join(&name), w.to_table()).map_err(io)?;
                r.witness_file = Some(name);
            }
        }
        std::fs::write(dir.join("records.jsonl"), self.to_jsonl()).map_err(io)?;
        let mut head = serde_json::to_value(&*self).expect("serializable");
        head.as_object_mut().expect("object").remove("records");
        std::fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&head).expect("serializable") + "\n",
        )
        .map_err(io)?;
        std::fs::write(dir.join("summary.txt"), self.summary_table()).map_err(io)?;
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompareError {
    #[error("need at least two reports")]
    TooFew,
    #[error("reports differ in {0}")]
    Mismatch(&'static str),
    #[error("mode full is a schedule, not a point of the inclusion chain")]
    FullMode,
    #[error("{path} is uncoverable under {weaker} but covered under the stronger mode {stronger}")]
    Violation { path: String, weaker: Mode, stronger: Mode },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditStep {
    pub from: Mode,
    pub to: Mode,
    pub uncoverable_from: usize,
    pub uncoverable_to: usize,
    /// Newly uncoverable paths.
    pub gained: Vec<String>,
    /// Uncoverable before, unknown after.
    pub inconclusive: Vec<String>,
    /// Every path has the same verdict in both modes.
    pub identical: bool,
}

impl AuditStep {
    pub fn strict_growth(&self) -> bool {
        !self.gained.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModeAudit {
    pub steps: Vec<AuditStep>,
}

/// Checks that uncoverable sets only grow along the mode chain.
pub fn compare_modes(reports: &[&Report]) -> Result<ModeAudit, CompareError> {
    if reports.len() < 2 {
        return Err(CompareError::TooFew);
    }
    let first = reports[0];
    let paths = |r: &Report| r.records.iter().map(|x| (x.path.clone(), x.sink.clone())).collect::<Vec<_>>();
    for r in &reports[1..] {
        if r.design != first.design {
            return Err(CompareError::Mismatch("design"));
        }
        if r.program != first.program {
            return Err(CompareError::Mismatch("program"));
        }
        if r.max_k != first.max_k {
            return Err(CompareError::Mismatch("bound"));
        }
        if paths(r) != paths(first) {
            return Err(CompareError::Mismatch("leakage paths"));
        }
    }
    let mut sorted: Vec<(Mode, &Report)> = Vec::new();
    for r in reports {
        sorted.push((r.mode.single().ok_or(CompareError::FullMode)?, r));
    }
    sorted.sort_by_key(|(m, _)| *m);
    let mut steps = Vec::new();
    for w in sorted.windows(2) {
        let ((ma, a), (mb, b)) = (w[0], w[1]);
        let ua = a.paths_with(VerdictKind::Uncoverable);
        let ub = b.paths_with(VerdictKind::Uncoverable);
        let mut inconclusive = Vec::new();
        for p in &ua {
            match b.record(p).map(|r| r.verdict) {
                Some(VerdictKind::Covered) => {
                    return Err(CompareError::Violation {
                        path: p.clone(),
                        weaker: ma,
                        stronger: mb,
                    })
                }
                Some(VerdictKind::Unknown) => inconclusive.push(p.clone()),
                _ => {}
            }
        }
        let identical = a
            .records
            .iter()
            .zip(&b.records)
            .all(|(x, y)| x.verdict == y.verdict);
        steps.push(AuditStep {
            from: ma,
            to: mb,
            uncoverable_from: ua.len(),
            uncoverable_to: ub.len(),
            gained: ub.difference(&ua).cloned().collect(),
            inconclusive,
            identical,
        });
    }
    Ok(ModeAudit { steps })
}
