//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

pub mod circuits;
pub mod iss;
pub mod sere;

use std::collections::BTreeMap;

use leakcover::fixtures;
use leakcover::hdl::FlatNetlist;
use leakcover::ifa::LabelConfig;
use leakcover::pipeline::{load_design, run, Report, RunInputs, RunLimits, RunMode, Settings};
use leakcover::software::{assemble_with, CoreInterface, ProgramImage};

/// Bound used for the MiniRV runs; the longest witness needs about eight
/// cycles.
pub const FIXTURE_MAX_K: usize = 12;

pub const TRIGGERS: [i64; 4] = [0x5a5a, 0, 0x7ff, 0x1234_5678];

pub fn minirv(trap_illegal: u64) -> FlatNetlist {
    let files = vec![("minirv.v".to_string(), fixtures::MINIRV.to_string())];
    let params: BTreeMap<String, u64> = [("TRAP_ILLEGAL".to_string(), trap_illegal)].into();
    load_design(&files, Some("minirv"), &params).expect("MiniRV elaborates")
}

pub fn interface() -> CoreInterface {
    CoreInterface::from_toml(fixtures::MINIRV_INTERFACE).unwrap()
}

pub fn program(src: &str) -> ProgramImage {
    assemble_with(src, &[]).unwrap()
}

pub fn trojan(trigger: i64) -> ProgramImage {
    assemble_with(fixtures::TROJAN, &[("TRIGGER", trigger)]).unwrap()
}

pub fn inputs(trap_illegal: u64, program: Option<ProgramImage>) -> RunInputs {
    let netlist = minirv(trap_illegal);
    let labels = LabelConfig::from_toml(fixtures::MINIRV_LABELS)
        .unwrap()
        .resolve(&netlist)
        .unwrap();
    RunInputs {
        netlist,
        labels,
        interface: Some(interface()),
        program,
    }
}

pub fn settings(mode: RunMode, jobs: usize) -> Settings {
    Settings {
        mode,
        limits: RunLimits {
            max_k: Some(FIXTURE_MAX_K),
            jobs,
            ..RunLimits::default()
        },
        stack_depth: None,
    }
}

pub fn run_mode(inputs: &RunInputs, mode: RunMode) -> Report {
    run(inputs, &settings(mode, 0)).unwrap_or_else(|f| panic!("{mode} run failed: {f}"))
}

/// The three fixture programs plus the Trojan under each trigger.
pub fn fixture_programs() -> Vec<(String, ProgramImage)> {
    let mut out = vec![
        ("naive".to_string(), program(fixtures::NAIVE)),
        ("patched".to_string(), program(fixtures::PATCHED)),
    ];
    for t in TRIGGERS {
        out.push((format!("trojan({t:#x})"), trojan(t)));
    }
    out
}

/// `(path, verdict)` pairs, sorted by path.
pub fn verdicts(r: &Report) -> Vec<(String, &'static str)> {
    let mut v: Vec<_> = r.records.iter().map(|x| (x.path.clone(), x.verdict.name())).collect();
    v.sort();
    v
}
