//! Cover checking: bounded model checking for witnesses, k-induction for
//! proofs of uncoverability.

use std::time::Instant;

use leakcover_sat::{Lit, SolveResult};
use serde::{Deserialize, Serialize};

use super::aig::{AigLit, Node};
use super::monitor::{attach_monitor, compile_monitor};
use super::ts::{TransitionSystem, VarRole};
use super::unroll::Unroller;
use super::witness::Witness;
use crate::hdl::FlatNetlist;
use crate::property::Property;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckOptions {
    /// Deepest frame searched for a witness.
    pub max_k: usize,
    pub induction: bool,
    /// Prove "monitor state never active" invariants to strengthen induction.
    pub lemmas: bool,
    pub lemma_depth: usize,
    /// Conflict limit per SAT call.
    pub conflict_budget: Option<u64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            max_k: 20,
            induction: true,
            lemmas: true,
            lemma_depth: 2,
            conflict_budget: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bmc,
    KInduction,
    ExplicitState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Covered { depth: usize, witness: Witness },
    Uncoverable { method: Method, depth: usize },
    Unknown { bound: usize },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Covered { .. } => "covered",
            Verdict::Uncoverable { .. } => "uncoverable",
            Verdict::Unknown { .. } => "unknown",
        }
    }

    pub fn is_covered(&self) -> bool {
        matches!(self, Verdict::Covered { .. })
    }

    pub fn is_uncoverable(&self) -> bool {
        matches!(self, Verdict::Uncoverable { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub sat_queries: u64,
    pub lemmas: usize,
    pub millis: u128,
}

/// Product of the design with the monitor of `cover`.
pub fn product(base: &TransitionSystem, cover: &Property) -> (TransitionSystem, Vec<usize>) {
    let mut ts = base.clone();
    ts.add_frozen(&cover.frozen);
    let nfa = compile_monitor(&cover.body);
    let monitor = attach_monitor(&mut ts, &nfa);
    (ts, monitor)
}

pub fn check_cover(netlist: &FlatNetlist, base: &TransitionSystem, cover: &Property, opts: &CheckOptions) -> CheckReport {
    let start = Instant::now();
    let (ts, monitor) = product(base, cover);
    let mut r = check_ts(netlist, &ts, &monitor, opts);
    r.millis = start.elapsed().as_millis();
    r
}

/// Latches in the transitive fan-in of `bad` and the constraints.
pub fn coi_latches(ts: &TransitionSystem) -> Vec<usize> {
    let mut seen = vec![false; ts.aig.len()];
    let mut latch = vec![false; ts.latches.len()];
    let mut stack: Vec<usize> = ts.constraints.iter().chain([&ts.bad]).map(|l| l.node()).collect();
    while let Some(n) = stack.pop() {
        if std::mem::replace(&mut seen[n], true) {
            continue;
        }
        match ts.aig.node(n) {
            Node::Const => {}
            Node::Var(i) => {
                if let VarRole::Latch(l) = ts.roles[i as usize] {
                    latch[l] = true;
                    stack.push(ts.latches[l].next.node());
                }
            }
            Node::And(a, b) => {
                stack.push(a.node());
                stack.push(b.node());
            }
        }
    }
    (0..ts.latches.len()).filter(|&l| latch[l]).collect()
}

fn witness(netlist: &FlatNetlist, u: &Unroller, depth: usize) -> Witness {
    let ts = u.ts();
    let read = |frame: usize, lits: &[AigLit]| {
        lits.iter()
            .enumerate()
            .fold(0u64, |acc, (i, &l)| acc | (u64::from(u.value(frame, l)) << i))
    };
    let signals = ts
        .input_map
        .iter()
        .map(|(id, _)| netlist.name(*id).to_string())
        .collect();
    let cycles = (0..=depth)
        .map(|f| {
            ts.input_map
                .iter()
                .map(|(_, idxs)| {
                    let lits: Vec<AigLit> = idxs.iter().map(|&i| ts.inputs[i]).collect();
                    read(f, &lits)
                })
                .collect()
        })
        .collect();
    let frozen = ts
        .frozen_map
        .iter()
        .map(|(fv, idxs)| {
            let lits: Vec<AigLit> = idxs.iter().map(|&l| ts.latches[l].var).collect();
            (fv.index, read(0, &lits))
        })
        .collect();
    Witness {
        frozen,
        signals,
        cycles,
    }
}

/// Houdini-style fixpoint: keeps the monitor latches that provably stay 0.
fn prove_lemmas(ts: &TransitionSystem, monitor: &[usize], opts: &CheckOptions, queries: &mut u64) -> Vec<AigLit> {
    let d = opts.lemma_depth.max(1);
    let mut cand: Vec<usize> = monitor.to_vec();
    let mut base = Unroller::new(ts, true);
    base.solver.set_conflict_budget(opts.conflict_budget);
    for f in 0..d {
        base.assert_constraints(f);
        cand.retain(|&l| {
            let v = base.lit(f, ts.latches[l].var);
            base.solve(&[v]) == SolveResult::Unsat
        });
    }
    *queries += base.queries();
    let mut step = Unroller::new(ts, false);
    step.solver.set_conflict_budget(opts.conflict_budget);
    for f in 0..=d {
        step.assert_constraints(f);
    }
    loop {
        let mut assume = Vec::new();
        for f in 0..d {
            for &l in &cand {
                assume.push(!step.lit(f, ts.latches[l].var));
            }
        }
        let before = cand.len();
        let mut kept = Vec::new();
        for &l in &cand {
            let v = step.lit(d, ts.latches[l].var);
            let mut a = assume.clone();
            a.push(v);
            if step.solve(&a) == SolveResult::Unsat {
                kept.push(l);
            }
        }
        cand = kept;
        if cand.len() == before {
            break;
        }
    }
    *queries += step.queries();
    cand.iter().map(|&l| !ts.latches[l].var).collect()
}

fn differ(u: &mut Unroller, coi: &[usize], i: usize, j: usize) {
    let ts = u.ts();
    let mut clause = Vec::new();
    for &l in coi {
        let x = u.lit(i, ts.latches[l].var);
        let y = u.lit(j, ts.latches[l].var);
        let d = u.solver.new_var().pos();
        u.solver.add_clause(&[!d, x, y]);
        u.solver.add_clause(&[!d, !x, !y]);
        clause.push(d);
    }
    u.solver.add_clause(&clause);
}

fn equal_pair(u: &Unroller, coi: &[usize], k: usize) -> Option<(usize, usize)> {
    let ts = u.ts();
    let states: Vec<Vec<bool>> = (0..=k)
        .map(|f| coi.iter().map(|&l| u.value(f, ts.latches[l].var)).collect())
        .collect();
    for i in 0..=k {
        for j in i + 1..=k {
            if states[i] == states[j] {
                return Some((i, j));
            }
        }
    }
    None
}

/// Checks a product system whose `bad` signals a completed match.
pub fn check_ts(netlist: &FlatNetlist, ts: &TransitionSystem, monitor: &[usize], opts: &CheckOptions) -> CheckReport {
    let mut queries = 0;
    let mut base = Unroller::new(ts, true);
    base.solver.set_conflict_budget(opts.conflict_budget);
    let mut step = Unroller::new(ts, false);
    step.solver.set_conflict_budget(opts.conflict_budget);
    let coi = coi_latches(ts);
    let mut lemmas: Option<Vec<AigLit>> = None;
    let mut step_alive = opts.induction;
    let report = |verdict, queries, lemmas: &Option<Vec<AigLit>>| CheckReport {
        verdict,
        sat_queries: queries,
        lemmas: lemmas.as_ref().map_or(0, Vec::len),
        millis: 0,
    };
    for k in 0..=opts.max_k {
        base.assert_constraints(k);
        let b = base.lit(k, ts.bad);
        match base.solve(&[b]) {
            SolveResult::Sat => {
                let w = witness(netlist, &base, k);
                return report(
                    Verdict::Covered { depth: k, witness: w },
                    queries + base.queries() + step.queries(),
                    &lemmas,
                );
            }
            SolveResult::Unknown => {
                return report(
                    Verdict::Unknown { bound: k },
                    queries + base.queries() + step.queries(),
                    &lemmas,
                )
            }
            SolveResult::Unsat => {
                base.solver.add_clause(&[!b]);
            }
        }
        if !step_alive {
            continue;
        }
        if k == 1 && opts.lemmas && lemmas.is_none() {
            let ls = prove_lemmas(ts, monitor, opts, &mut queries);
            for f in 0..k {
                for &l in &ls {
                    step.assert(f, l);
                }
            }
            lemmas = Some(ls);
        }
        step.assert_constraints(k);
        for &l in &coi {
            step.lit(k, ts.latches[l].var);
        }
        if let Some(ls) = &lemmas {
            for &l in ls {
                step.assert(k, l);
            }
        }
        if k > 0 {
            let prev = step.lit(k - 1, ts.bad);
            step.solver.add_clause(&[!prev]);
        }
        let sb: Lit = step.lit(k, ts.bad);
        loop {
            match step.solve(&[sb]) {
                SolveResult::Unsat => {
                    return report(
                        Verdict::Uncoverable {
                            method: Method::KInduction,
                            depth: k,
                        },
                        queries + base.queries() + step.queries(),
                        &lemmas,
                    );
                }
                SolveResult::Unknown => {
                    step_alive = false;
                    break;
                }
                SolveResult::Sat => match equal_pair(&step, &coi, k) {
                    Some((i, j)) => differ(&mut step, &coi, i, j),
                    None => break,
                },
            }
        }
    }
    report(
        Verdict::Unknown { bound: opts.max_k },
        queries + base.queries() + step.queries(),
        &lemmas,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::{elaborate, parse_rtl};
    use crate::mc::compile_ts;
    use crate::property::parse_psl;

    const COUNTER: &str = "module c(input clk, input en, output [2:0] q);
        reg [2:0] cnt;
        always @(posedge clk) cnt <= cnt + 3'd1;
        assign q = cnt;
    endmodule";

    #[test]
    fn counter_cover_and_proof() {
        let n = elaborate(&parse_rtl(COUNTER).unwrap()).unwrap();
        let base = compile_ts(&n, &[]).unwrap();
        let p = parse_psl(&n, "cover { (cnt == 3'd5) };").unwrap();
        let r = check_cover(&n, &base, &p, &CheckOptions::default());
        match &r.verdict {
            Verdict::Covered { depth, witness } => {
                assert_eq!(*depth, 5);
                witness.replay(&n, &[], &p).unwrap();
            }
            v => panic!("{v:?}"),
        }
        let p = parse_psl(&n, "cover { (cnt == 3'd5) ; (cnt == 3'd3) };").unwrap();
        let r = check_cover(&n, &base, &p, &CheckOptions::default());
        assert!(r.verdict.is_uncoverable(), "{:?}", r.verdict);
    }
}
