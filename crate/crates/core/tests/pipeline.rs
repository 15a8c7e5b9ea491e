mod common;

use std::path::Path;

use leakcover::fixtures;
use leakcover::hdl::Simulator;
use leakcover::mc::Witness;
use leakcover::pipeline::{
    assumptions_for, compare_modes, run, run_config, CompareError, Report, RunConfig, RunMode, VerdictKind,
};
use leakcover::software::Mode;

fn naive_inputs() -> leakcover::pipeline::RunInputs {
    common::inputs(1, Some(common::program(fixtures::NAIVE)))
}

/// Fetch port values per cycle, by driving the witness on the simulator.
fn fetches(inputs: &leakcover::pipeline::RunInputs, mode: Mode, w: &Witness) -> Vec<(u32, u32)> {
    let set = assumptions_for(inputs, mode, None).unwrap();
    let design = set.design(&inputs.netlist);
    let ids: Vec<_> = w.signals.iter().map(|s| design.lookup(s).unwrap()).collect();
    let (addr, data) = (design.lookup("imem_addr").unwrap(), design.lookup("imem_rdata").unwrap());
    let mut sim = Simulator::new(design);
    let mut frozen = vec![0; w.frozen.iter().map(|f| f.0 as usize + 1).max().unwrap_or(0)];
    for &(i, v) in &w.frozen {
        frozen[i as usize] = v;
    }
    sim.set_frozen(frozen);
    let mut out = Vec::new();
    for row in &w.cycles {
        sim.apply(&ids.iter().copied().zip(row.iter().copied()).collect::<Vec<_>>());
        out.push((sim.value(addr) as u32, sim.value(data) as u32));
        sim.tick();
    }
    out
}

#[test]
fn attribution_follows_the_fetch_port() {
    let inputs = naive_inputs();
    let img = inputs.program.as_ref().unwrap();
    let mut unmapped_free = 0;
    for (run_mode, mode) in [(RunMode::Stack, Mode::Stack), (RunMode::None, Mode::None)] {
        let r = common::run_mode(&inputs, run_mode);
        for rec in r.records.iter().filter(|x| x.verdict == VerdictKind::Covered) {
            let w = rec.witness.as_ref().unwrap();
            let fetched = fetches(&inputs, mode, w);
            assert_eq!(rec.attribution.len(), fetched.len());
            for (a, (cycle, &(addr, word))) in rec.attribution.iter().zip(fetched.iter().enumerate()) {
                assert_eq!((a.cycle, a.address, a.word), (cycle, addr, word));
                let expect = (img.words.get(&addr) == Some(&word)).then(|| img.symbols[&addr].line);
                assert_eq!(a.line, expect, "{} cycle {cycle}", rec.path);
            }
            if mode == Mode::Stack {
                assert!(rec.attribution.iter().all(|a| a.is_mapped()), "{}", rec.path);
            } else {
                unmapped_free += rec.attribution.iter().filter(|a| !a.is_mapped()).count();
            }
        }
    }
    assert!(unmapped_free > 0, "a free program memory should fetch words outside the image");
}

#[test]
fn mode_comparison_checks_its_inputs() {
    let naive = naive_inputs();
    let patched = common::inputs(1, Some(common::program(fixtures::PATCHED)));
    let a = common::run_mode(&naive, RunMode::Used);
    let b = common::run_mode(&patched, RunMode::Used);
    let full = common::run_mode(&naive, RunMode::Full);
    assert_eq!(compare_modes(&[&a]).unwrap_err(), CompareError::TooFew);
    assert_eq!(compare_modes(&[&a, &b]).unwrap_err(), CompareError::Mismatch("program"));
    assert_eq!(compare_modes(&[&a, &full]).unwrap_err(), CompareError::FullMode);
    let same = compare_modes(&[&a, &a]).unwrap();
    assert!(same.steps[0].identical && !same.steps[0].strict_growth());
}

fn verdict_list(r: &Report) -> Vec<(String, VerdictKind, Option<Mode>)> {
    r.records.iter().map(|x| (x.path.clone(), x.verdict, x.mode)).collect()
}

#[test]
fn worker_count_does_not_change_results() {
    let inputs = naive_inputs();
    let base = run(&inputs, &common::settings(RunMode::Full, 1)).unwrap();
    for jobs in [4, 16] {
        let r = run(&inputs, &common::settings(RunMode::Full, jobs)).unwrap();
        assert_eq!(verdict_list(&r), verdict_list(&base), "jobs {jobs}");
        for (x, y) in r.records.iter().zip(&base.records) {
            assert_eq!(x.depth, y.depth, "{}", x.path);
        }
    }
}

#[test]
fn full_schedule_ends_where_stack_does() {
    for (name, img) in common::fixture_programs().into_iter().take(3) {
        let inputs = common::inputs(1, Some(img));
        let full = common::run_mode(&inputs, RunMode::Full);
        let stack = common::run_mode(&inputs, RunMode::Stack);
        for (f, s) in full.records.iter().zip(&stack.records) {
            assert_eq!(f.path, s.path);
            assert_eq!(f.verdict, s.verdict, "{name} {}", f.path);
            // a path decided early never reaches later stages
            if let Some(m) = f.mode {
                assert_eq!(f.stages.last().unwrap().mode, m);
            }
        }
        assert_eq!(full.summary.total, full.summary.covered + full.summary.uncoverable + full.summary.unknown);
    }
}

#[test]
fn report_files_round_trip() {
    let inputs = naive_inputs();
    let mut r = common::run_mode(&inputs, RunMode::Stack);
    let dir = tempfile::tempdir().unwrap();
    r.write(dir.path()).unwrap();
    let jsonl = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    let rows: Vec<serde_json::Value> = jsonl.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), r.records.len());
    for (row, rec) in rows.iter().zip(&r.records) {
        assert_eq!(row["path"], rec.path.as_str());
        assert_eq!(row["verdict"], rec.verdict.name());
        if let Some(file) = &rec.witness_file {
            let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
            assert_eq!(Some(Witness::from_table(&text).unwrap()), rec.witness);
        } else {
            assert!(rec.witness.is_none());
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["covered"], r.summary.covered);
    assert!(summary.get("records").is_none());
    assert!(std::fs::read_to_string(dir.path().join("summary.txt")).unwrap().contains("covered"));
}

fn fixture_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
}

#[test]
fn run_configuration() {
    let f = fixture_dir().display().to_string();
    let cfg = format!(
        "rtl = [\"{f}/minirv/minirv.v\"]\ntop = \"minirv\"\nlabels = \"{f}/minirv/labels.toml\"\n\
         interface = \"{f}/minirv/interface.toml\"\nprogram = \"{f}/programs/naive.s\"\nmode = \"used\"\n\
         [params]\nTRAP_ILLEGAL = 1\n[limits]\nmax_k = 12\n"
    );
    let parsed = RunConfig::from_toml(&cfg).unwrap();
    let via_config = run_config(&parsed, Path::new("/")).unwrap();
    let direct = common::run_mode(&naive_inputs(), RunMode::Used);
    assert_eq!(verdict_list(&via_config), verdict_list(&direct));

    let bad = [
        cfg.replace(&format!("rtl = [\"{f}/minirv/minirv.v\"]"), "rtl = []"),
        cfg.replace(&format!("program = \"{f}/programs/naive.s\"\n"), ""),
        cfg.replace(&format!("interface = \"{f}/minirv/interface.toml\"\n"), ""),
        cfg.replace("naive.s", "naive.hex").replace("\"used\"", "\"jumps\""),
        cfg.replace("mode = \"used\"", "mode = \"used\"\ncolour = \"red\""),
        cfg.replace("\"used\"", "\"sideways\""),
    ];
    for b in &bad {
        assert!(RunConfig::from_toml(b).is_err(), "{b}");
    }
    let missing = RunConfig::from_toml(&cfg.replace("naive.s", "absent.s")).unwrap();
    let err = run_config(&missing, Path::new("/")).unwrap_err();
    assert!(err.error.message.contains("absent.s"), "{err}");
}
