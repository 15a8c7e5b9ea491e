//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use leakcover::fixtures;
use leakcover::hdl::{elaborate, parse_rtl, SignalId};
use leakcover::ifa::{enumerate_paths, EdgeGraph, LabelConfig, Limits};
use leakcover::mc::{check_cover, compile_monitor, compile_ts, explicit_cover, CheckOptions, ExplicitLimits, Verdict};
use leakcover::pipeline::{assumptions_for, compare_modes, paths_and_properties, Report, RunInputs, RunMode, VerdictKind};
use leakcover::property::{emit_psl, path_property};
use leakcover::software::{validate_assumptions, Mode, ProgramImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::sere::{for_each_sequence, nfa_language, Atoms};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Reports of every fixture run, shared by several criteria.
struct Suite {
    /// (program name, inputs, reports by mode)
    runs: Vec<(String, RunInputs, BTreeMap<&'static str, (Report, Duration)>)>,
}

impl Suite {
    fn build() -> Suite {
        let mut runs = Vec::new();
        for (name, image) in common::fixture_programs() {
            let inputs = common::inputs(1, Some(image));
            let mut reports = BTreeMap::new();
            for mode in RunMode::ALL {
                let t = Instant::now();
                let r = common::run_mode(&inputs, mode);
                reports.insert(mode.name(), (r, t.elapsed()));
            }
            runs.push((name, inputs, reports));
        }
        Suite { runs }
    }

    fn get(&self, program: &str, mode: RunMode) -> &Report {
        let run = self.runs.iter().find(|r| r.0 == program).expect("program in suite");
        &run.2[mode.name()].0
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut agree, mut unknown, mut props, mut covered) = (0, 0, 0, 0);
    let circuits = 40;
    let opts = CheckOptions {
        max_k: 24,
        ..CheckOptions::default()
    };
    for i in 0..circuits {
        let c = common::circuits::random_circuit(&mut rng, i);
        let bits = c.netlist.state_bits();
        ensure(bits <= 20, || format!("circuit {i} has {bits} state bits"))?;
        let ts = compile_ts(&c.netlist, &c.assumptions).map_err(|e| e.to_string())?;
        for p in &c.properties {
            props += 1;
            let r = check_cover(&c.netlist, &ts, p, &opts);
            let o = explicit_cover(&c.netlist, &c.assumptions, p, ExplicitLimits::default()).map_err(|e| e.to_string())?;
            match &r.verdict {
                Verdict::Unknown { .. } => unknown += 1,
                v if v.is_covered() == o.covered => {
                    agree += 1;
                    covered += usize::from(o.covered);
                }
                v => {
                    return Err(format!(
                        "{}: checker says {}, explicit search says covered={}\n{}",
                        p.name,
                        v.name(),
                        o.covered,
                        c.source
                    ))
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "{circuits} circuits, {props} properties: {agree} agree ({covered} covered), {unknown} unknown excluded, 0 disagree, {secs:.1}s"
    ))
}

fn sere_semantics() -> Outcome {
    let atoms = Atoms::new();
    let (mut seqs, mut disagree) = (0usize, 0usize);
    let mut first = None;
    for_each_sequence(&atoms, 7, |s, reference| {
        seqs += 1;
        let got = nfa_language(&atoms, &compile_monitor(s));
        for m in 1..=common::sere::MAX_LEN {
            if got.0[m] != reference.0[m] {
                disagree += 1;
                first.get_or_insert_with(|| format!("{s:?} at length {m}"));
                break;
            }
        }
    });
    ensure(disagree == 0, || format!("{disagree} sequences disagree, first: {}", first.unwrap_or_default()))?;
    let words: usize = (1..=6).map(|m| 8usize.pow(m)).sum();
    Ok(format!("{seqs} sequences x {words} traces, 0 disagreements"))
}

/// Operator skeleton of a cover body: each parenthesized condition becomes
/// `A`.
fn skeleton(psl: &str) -> Result<Vec<String>, String> {
    let open = psl.find('{').ok_or("no `{`")?;
    let close = psl.rfind('}').ok_or("no `}`")?;
    let body: Vec<char> = psl[open + 1..close].chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < body.len() {
        match body[i] {
            c if c.is_whitespace() => i += 1,
            '(' => {
                let mut depth = 0;
                while i < body.len() {
                    match body[i] {
                        '(' => depth += 1,
                        ')' => depth -= 1,
                        _ => {}
                    }
                    i += 1;
                    if depth == 0 {
                        break;
                    }
                }
                out.push("A".to_string());
            }
            ';' | ':' => {
                out.push(body[i].to_string());
                i += 1;
            }
            '[' if body[i..].starts_with(&['[', '*', ']']) => {
                out.push("[*]".to_string());
                i += 3;
            }
            c => return Err(format!("unexpected `{c}` in {psl}")),
        }
    }
    Ok(out)
}

fn eq1_fidelity() -> Outcome {
    let n = elaborate(&parse_rtl(fixtures::BLOCKS).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let labels = LabelConfig::from_toml(fixtures::BLOCKS_LABELS)
        .and_then(|l| l.resolve(&n))
        .map_err(|e| e.to_string())?;
    let set = enumerate_paths(&n, &EdgeGraph::build(&n), &labels, Limits::default());
    ensure(set.paths.len() == 1, || format!("{} paths", set.paths.len()))?;
    let psl = emit_psl(&n, &path_property(&n, &set.paths[0]));
    // active(s2,s3) ; alive(s3)[*] ; active(s3,s4) : active(s4,s5) : active(s5,s6) ; alive(s6)[*] ; active(s7,s8)
    let expected = ["A", ";", "A", "[*]", ";", "A", ":", "A", ":", "A", ";", "A", "[*]", ";", "A"];
    let got = skeleton(&psl)?;
    ensure(got == expected, || format!("skeleton {} from {psl}", got.join(" ")))?;
    let conds: Vec<&str> = psl.split('(').skip(1).map(|s| s.split(')').next().unwrap_or("")).collect();
    let want = ["en3 == 1'b1", "en3 == 1'b0", "en4 == 1'b1", "en5 == 1'b1", "en6 == 1'b1", "en6 == 1'b0", "en8 == 1'b1"];
    ensure(conds == want, || format!("conditions {conds:?} in {psl}"))?;
    Ok(format!("{} tokens match: {}", got.len(), got.join(" ")))
}

fn mode_equality(suite: &Suite) -> Outcome {
    let none = suite.get("naive", RunMode::None);
    let legal = suite.get("naive", RunMode::Legal);
    let a = compare_modes(&[none, legal]).map_err(|e| e.to_string())?;
    ensure(a.steps[0].identical, || {
        format!("None {:?} vs Legal {:?}", common::verdicts(none), common::verdicts(legal))
    })?;
    let used = suite.get("naive", RunMode::Used);
    let jumps = suite.get("naive", RunMode::Jumps);
    let b = compare_modes(&[used, jumps]).map_err(|e| e.to_string())?;
    let step = &b.steps[0];
    ensure(step.strict_growth(), || {
        format!("Used {:?} vs Jumps {:?}", common::verdicts(used), common::verdicts(jumps))
    })?;
    Ok(format!(
        "None = Legal ({} uncoverable of {}); Used -> Jumps uncoverable {} -> {} (gained {:?})",
        a.steps[0].uncoverable_from,
        none.summary.total,
        step.uncoverable_from,
        step.uncoverable_to,
        step.gained
    ))
}

fn jumps_equals_stack(suite: &Suite) -> Outcome {
    let mut lines = Vec::new();
    for (name, _, _) in &suite.runs {
        let j = suite.get(name, RunMode::Jumps).paths_with(VerdictKind::Covered);
        let s = suite.get(name, RunMode::Stack).paths_with(VerdictKind::Covered);
        ensure(j == s, || format!("{name}: Jumps covered {j:?}, Stack covered {s:?}"))?;
        lines.push(format!("{name}:{}", j.len()));
    }
    ensure(suite.get("naive", RunMode::Stack).summary.covered > 0, || "naive has no covered path under Stack".into())?;
    Ok(format!("identical covered sets ({})", lines.join(", ")))
}

fn software_repair(suite: &Suite) -> Outcome {
    let naive = suite.get("naive", RunMode::Full);
    let mut hit = None;
    for r in naive.records.iter().filter(|r| r.verdict == VerdictKind::Covered) {
        let ops: BTreeSet<String> = r
            .attribution
            .iter()
            .filter_map(|a| a.text.as_deref())
            .filter_map(|t| t.split_whitespace().next().map(str::to_string))
            .collect();
        if ops.contains("ldk") && ops.contains("sw") {
            hit = Some(r);
            break;
        }
    }
    let r = hit.ok_or_else(|| format!("no covered naive path attributes ldk and sw ({} covered)", naive.summary.covered))?;
    let patched = suite.get("patched", RunMode::Full);
    ensure(patched.summary.covered == 0 && patched.summary.unknown == 0, || {
        format!("patched: {:?}", common::verdicts(patched))
    })?;
    let lines: Vec<String> = r
        .attribution
        .iter()
        .filter_map(|a| a.line.map(|l| format!("{l}")))
        .collect();
    Ok(format!(
        "naive {} covered, {} -> {} attributed to lines [{}]; patched 0 covered, 0 unknown, {} uncoverable",
        naive.summary.covered,
        r.path,
        r.sink,
        lines.join(","),
        patched.summary.uncoverable
    ))
}

fn trojan_detection(suite: &Suite) -> Outcome {
    let mut sets = Vec::new();
    for (name, _, reports) in suite.runs.iter().filter(|r| r.0.starts_with("trojan")) {
        let (r, t) = &reports["full"];
        ensure(t.as_secs() < 600, || format!("{name} took {t:?}"))?;
        let covered = r.paths_with(VerdictKind::Covered);
        ensure(!covered.is_empty(), || format!("{name}: nothing covered"))?;
        sets.push((name.clone(), covered, *t));
    }
    ensure(sets.len() == common::TRIGGERS.len(), || "missing trigger runs".into())?;
    let first = &sets[0].1;
    for (name, s, _) in &sets {
        ensure(s == first, || format!("{name}: covered {s:?} differs from {first:?}"))?;
    }
    let slowest = sets.iter().map(|s| s.2).max().unwrap_or_default();
    Ok(format!(
        "{} triggers, covered set {:?} each time, slowest run {:.2}s",
        sets.len(),
        first,
        slowest.as_secs_f64()
    ))
}

fn full_economy(suite: &Suite) -> Outcome {
    let mut lines = Vec::new();
    for (name, _, _) in &suite.runs {
        let full = suite.get(name, RunMode::Full).summary.sat_queries;
        let separate: u64 = [RunMode::Used, RunMode::Jumps, RunMode::Stack]
            .iter()
            .map(|&m| suite.get(name, m).summary.sat_queries)
            .sum();
        ensure(full <= separate, || format!("{name}: Full {full} > separate {separate}"))?;
        lines.push(format!("{name} {full}<={separate}"));
    }
    Ok(lines.join(", "))
}

fn witness_replay(suite: &Suite) -> Outcome {
    let mut replayed = 0;
    for (name, inputs, reports) in &suite.runs {
        let (_, props) = paths_and_properties(inputs, &common::settings(RunMode::Full, 0).limits);
        for (mode_name, (report, _)) in reports {
            for r in report.records.iter().filter(|r| r.verdict == VerdictKind::Covered) {
                let mode = r.mode.ok_or_else(|| format!("{name}/{mode_name}/{}: no deciding mode", r.path))?;
                let set = assumptions_for(inputs, mode, None).map_err(|e| e.to_string())?;
                let prop = props
                    .iter()
                    .find(|p| p.name == r.property)
                    .ok_or_else(|| format!("{}: property missing", r.property))?;
                let w = r.witness.as_ref().ok_or_else(|| format!("{name}/{mode_name}/{}: no witness", r.path))?;
                w.replay(set.design(&inputs.netlist), &set.invariants(), prop)
                    .map_err(|e| format!("{name}/{mode_name}/{}: {e}", r.path))?;
                replayed += 1;
            }
        }
    }
    ensure(replayed > 0, || "no covered witnesses".into())?;
    Ok(format!("{replayed}/{replayed} covered witnesses replay"))
}

fn assumption_validity() -> Outcome {
    let cycles = 10_000;
    let iface = common::interface();
    let netlist = common::minirv(1);
    let mut checked = 0;
    for (name, image) in common::fixture_programs() {
        let image: ProgramImage = image;
        for mode in [Mode::Legal, Mode::Used, Mode::Jumps, Mode::Stack] {
            let set = leakcover::software::generate(mode, &netlist, &iface, Some(&image), None).map_err(|e| e.to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(checked as u64);
            let result = validate_assumptions(&netlist, &iface, &image, &set, cycles, |_, _: SignalId| rng.gen::<u32>() as u64)
                .map_err(|e| e.to_string())?;
            result.map_err(|v| format!("{name} {mode}: `{}` violated in cycle {}", v.property, v.cycle))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (program, mode) pairs x {cycles} cycles, 0 violations"))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS  {name} ({secs:.1}s): {d}"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {e}");
            }
        }
    };
    report("oracle equivalence", &mut oracle_equivalence);
    report("sequence semantics", &mut sere_semantics);
    report("three-block skeleton", &mut eq1_fidelity);
    let t = Instant::now();
    let suite = catch_unwind(Suite::build);
    println!("      fixture suite built in {:.1}s", t.elapsed().as_secs_f64());
    match &suite {
        Ok(s) => {
            report("None = Legal, Used -> Jumps growth", &mut || mode_equality(s));
            report("Jumps = Stack", &mut || jumps_equals_stack(s));
            report("software repair", &mut || software_repair(s));
            report("trigger-independent Trojan detection", &mut || trojan_detection(s));
            report("Full-mode economy", &mut || full_economy(s));
            report("witness replay", &mut || witness_replay(s));
        }
        Err(_) => {
            for name in [
                "None = Legal, Used -> Jumps growth",
                "Jumps = Stack",
                "software repair",
                "trigger-independent Trojan detection",
                "Full-mode economy",
                "witness replay",
            ] {
                report(name, &mut || Err("fixture suite failed to run".into()));
            }
        }
    }
    report("assumption validity", &mut assumption_validity);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
