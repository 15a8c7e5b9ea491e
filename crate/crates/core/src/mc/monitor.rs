//! Nondeterministic automata for temporal sequences.
//!
//! Letters sit on transitions: a transition `p --c--> q` consumes one cycle
//! in which `c` holds. A sequence is matched by a run from a start state that
//! ends in an accepting state after at least one letter.

use std::collections::BTreeSet;

use super::aig::AigLit;
use super::ts::{Init, TransitionSystem};
use crate::hdl::{Expr, ValueEnv};
use crate::property::TemporalSeq;

#[derive(Clone, Debug)]
pub struct Transition {
    pub from: usize,
    pub cond: Expr,
    pub to: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Nfa {
    pub num_states: usize,
    pub start: BTreeSet<usize>,
    pub accept: BTreeSet<usize>,
    pub trans: Vec<Transition>,
}

struct Frag {
    start: BTreeSet<usize>,
    accept: BTreeSet<usize>,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.num_states += 1;
        self.num_states - 1
    }

    fn outgoing(&self, states: &BTreeSet<usize>) -> Vec<Transition> {
        self.trans
            .iter()
            .filter(|t| states.contains(&t.from))
            .cloned()
            .collect()
    }

    fn build(&mut self, s: &TemporalSeq) -> Frag {
        match s {
            TemporalSeq::Atom(c) => {
                let (p, q) = (self.state(), self.state());
                self.trans.push(Transition {
                    from: p,
                    cond: c.expr.clone(),
                    to: q,
                });
                Frag {
                    start: [p].into(),
                    accept: [q].into(),
                }
            }
            TemporalSeq::Concat(a, b) => {
                let fa = self.build(a);
                let fb = self.build(b);
                let a_null = !fa.start.is_disjoint(&fa.accept);
                let b_null = !fb.start.is_disjoint(&fb.accept);
                for t in self.outgoing(&fb.start) {
                    for &p in &fa.accept {
                        self.trans.push(Transition {
                            from: p,
                            cond: t.cond.clone(),
                            to: t.to,
                        });
                    }
                }
                let mut start = fa.start.clone();
                if a_null {
                    start.extend(&fb.start);
                }
                let mut accept = fb.accept;
                if b_null {
                    accept.extend(&fa.accept);
                }
                Frag { start, accept }
            }
            TemporalSeq::Fuse(a, b) => {
                let fa = self.build(a);
                let fb = self.build(b);
                let into_accept: Vec<Transition> = self
                    .trans
                    .iter()
                    .filter(|t| fa.accept.contains(&t.to))
                    .cloned()
                    .collect();
                for t1 in &into_accept {
                    for t2 in self.outgoing(&fb.start) {
                        self.trans.push(Transition {
                            from: t1.from,
                            cond: t1.cond.clone().and(t2.cond.clone()),
                            to: t2.to,
                        });
                    }
                }
                Frag {
                    start: fa.start,
                    accept: fb.accept,
                }
            }
            TemporalSeq::RepInf(a) => {
                let fa = self.build(a);
                for t in self.outgoing(&fa.start) {
                    for &p in &fa.accept {
                        self.trans.push(Transition {
                            from: p,
                            cond: t.cond.clone(),
                            to: t.to,
                        });
                    }
                }
                let mut accept = fa.accept;
                accept.extend(&fa.start);
                Frag {
                    start: fa.start,
                    accept,
                }
            }
        }
    }

    /// Successor states after one letter, starting from `active`.
    pub fn step(&self, active: &BTreeSet<usize>, env: &impl ValueEnv) -> BTreeSet<usize> {
        self.trans
            .iter()
            .filter(|t| active.contains(&t.from) && t.cond.eval(env) != 0)
            .map(|t| t.to)
            .collect()
    }

    /// Whether the whole trace (and nothing shorter or longer) matches.
    pub fn accepts<E: ValueEnv>(&self, trace: &[E]) -> bool {
        if trace.is_empty() {
            return false;
        }
        let mut cur = self.start.clone();
        for letter in trace {
            cur = self.step(&cur, letter);
        }
        !cur.is_disjoint(&self.accept)
    }
}

/// Compiles a sequence into an automaton.
pub fn compile_monitor(seq: &TemporalSeq) -> Nfa {
    let mut nfa = Nfa::default();
    let f = nfa.build(seq);
    nfa.start = f.start;
    nfa.accept = f.accept;
    nfa
}

/// Adds the automaton as a monitor to `ts` and sets `bad` to "a match ends in
/// this cycle". A match may begin in any cycle.
///
/// One latch per state records that the state was reached by the end of the
/// previous cycle; start states are active in every cycle.
pub fn attach_monitor(ts: &mut TransitionSystem, nfa: &Nfa) -> Vec<usize> {
    let mut latch = vec![None; nfa.num_states];
    let has_incoming: BTreeSet<usize> = nfa.trans.iter().map(|t| t.to).collect();
    for (q, slot) in latch.iter_mut().enumerate() {
        if has_incoming.contains(&q) && !nfa.start.contains(&q) {
            let var = ts.aig.new_var();
            let idx = ts.latches.len();
            ts.latches.push(super::ts::Latch {
                var,
                next: var,
                init: Init::Zero,
            });
            ts.roles.push(super::ts::VarRole::Latch(idx));
            *slot = Some((idx, var));
        }
    }
    let active: Vec<AigLit> = (0..nfa.num_states)
        .map(|q| {
            if nfa.start.contains(&q) {
                AigLit::TRUE
            } else {
                latch[q].map(|(_, v)| v).unwrap_or(AigLit::FALSE)
            }
        })
        .collect();
    let mut reach = vec![AigLit::FALSE; nfa.num_states];
    for t in &nfa.trans {
        let c = ts.blast_bool(&t.cond);
        let fire = ts.aig.and(active[t.from], c);
        reach[t.to] = ts.aig.or(reach[t.to], fire);
    }
    for (q, slot) in latch.iter().enumerate() {
        if let Some((idx, _)) = slot {
            ts.latches[*idx].next = reach[q];
        }
    }
    let bad = ts.aig.or_all(nfa.accept.iter().map(|&q| reach[q]));
    ts.bad = bad;
    latch.iter().flatten().map(|(i, _)| *i).collect()
}
