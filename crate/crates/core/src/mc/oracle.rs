//! Reference semantics, independent of the automaton and SAT encodings:
//! sequence matching by derivatives and explicit-state reachability.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::rc::Rc;

use thiserror::Error;

use crate::hdl::{Expr, FlatNetlist, SignalId, SignalKind, Simulator, ValueEnv};
use crate::property::{Property, TemporalSeq};

/// Residual sequence: what is left to match after some letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Re {
    /// Matched; nothing left.
    Eps,
    Atom(usize),
    Concat(Rc<Re>, Rc<Re>),
    Fuse(Rc<Re>, Rc<Re>),
    Rep(Rc<Re>),
}

fn lower(s: &TemporalSeq, atoms: &mut Vec<Expr>) -> Re {
    match s {
        TemporalSeq::Atom(c) => {
            atoms.push(c.expr.clone());
            Re::Atom(atoms.len() - 1)
        }
        TemporalSeq::Concat(a, b) => Re::Concat(Rc::new(lower(a, atoms)), Rc::new(lower(b, atoms))),
        TemporalSeq::Fuse(a, b) => Re::Fuse(Rc::new(lower(a, atoms)), Rc::new(lower(b, atoms))),
        TemporalSeq::RepInf(a) => Re::Rep(Rc::new(lower(a, atoms))),
    }
}

fn nullable(r: &Re) -> bool {
    match r {
        Re::Eps | Re::Rep(_) => true,
        Re::Atom(_) | Re::Fuse(..) => false,
        Re::Concat(a, b) => nullable(a) && nullable(b),
    }
}

fn cat(a: Re, b: &Rc<Re>) -> Re {
    match a {
        Re::Eps => (**b).clone(),
        a => Re::Concat(Rc::new(a), b.clone()),
    }
}

/// Residuals after consuming one letter.
fn deriv(r: &Re, letter: &[bool], out: &mut Vec<Re>) {
    match r {
        Re::Eps => {}
        Re::Atom(i) => {
            if letter[*i] {
                out.push(Re::Eps);
            }
        }
        Re::Concat(a, b) => {
            let mut da = Vec::new();
            deriv(a, letter, &mut da);
            out.extend(da.into_iter().map(|x| cat(x, b)));
            if nullable(a) {
                deriv(b, letter, out);
            }
        }
        Re::Rep(a) => {
            let mut da = Vec::new();
            deriv(a, letter, &mut da);
            let whole = Rc::new(r.clone());
            out.extend(da.into_iter().map(|x| cat(x, &whole)));
        }
        Re::Fuse(a, b) => {
            let mut da = Vec::new();
            deriv(a, letter, &mut da);
            // the overlap letter ends `a` exactly here
            let overlap = da.iter().any(nullable);
            out.extend(
                da.into_iter()
                    .filter(|x| *x != Re::Eps)
                    .map(|x| Re::Fuse(Rc::new(x), b.clone())),
            );
            if overlap {
                deriv(b, letter, out);
            }
        }
    }
}

/// Unanchored matcher: reports, cycle by cycle, whether some match of the
/// sequence ends in that cycle.
#[derive(Clone, Debug)]
pub struct Matcher {
    root: Re,
    atoms: Vec<Expr>,
    pending: BTreeSet<Re>,
}

impl Matcher {
    pub fn new(seq: &TemporalSeq) -> Self {
        let mut atoms = Vec::new();
        let root = lower(seq, &mut atoms);
        Matcher {
            root,
            atoms,
            pending: BTreeSet::new(),
        }
    }

    pub fn letter(&self, env: &impl ValueEnv) -> Vec<bool> {
        self.atoms.iter().map(|a| a.eval(env) != 0).collect()
    }

    pub fn step(&mut self, env: &impl ValueEnv) -> bool {
        let letter = self.letter(env);
        self.step_letter(&letter)
    }

    pub fn step_letter(&mut self, letter: &[bool]) -> bool {
        let (next, hit) = advance(&self.root, &self.pending, letter);
        self.pending = next;
        hit
    }
}

fn advance(root: &Re, pending: &BTreeSet<Re>, letter: &[bool]) -> (BTreeSet<Re>, bool) {
    let mut out = Vec::new();
    deriv(root, letter, &mut out);
    for r in pending {
        deriv(r, letter, &mut out);
    }
    let hit = out.iter().any(nullable);
    let next = out.into_iter().filter(|r| *r != Re::Eps).collect();
    (next, hit)
}

/// Whether the whole word matches the sequence (anchored at both ends).
/// `letters[t][i]` is the value of the `i`-th atom, left to right, at cycle `t`.
pub fn matches_word(seq: &TemporalSeq, letters: &[Vec<bool>]) -> bool {
    let mut atoms = Vec::new();
    let root = lower(seq, &mut atoms);
    if letters.is_empty() {
        return false;
    }
    let mut cur: Vec<Re> = vec![root];
    for l in letters {
        let mut next = Vec::new();
        for r in &cur {
            deriv(r, l, &mut next);
        }
        next.sort();
        next.dedup();
        cur = next;
    }
    cur.iter().any(nullable)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplicitLimits {
    pub max_state_bits: u64,
    pub max_input_bits: u32,
    pub max_states: usize,
}

impl Default for ExplicitLimits {
    fn default() -> Self {
        ExplicitLimits {
            max_state_bits: 20,
            max_input_bits: 12,
            max_states: 1 << 20,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExplicitError {
    #[error("{0} state bits exceed the explicit-state limit")]
    StateBits(u64),
    #[error("{0} input bits exceed the explicit-state limit")]
    InputBits(u32),
    #[error("more than {0} product states")]
    States(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitResult {
    pub covered: bool,
    /// Cycle (from 0) in which the shortest match ends.
    pub depth: Option<usize>,
    /// Product states explored.
    pub states: usize,
}

fn frozen_valuations(prop: &Property) -> Vec<Vec<u64>> {
    let n = prop.frozen.iter().map(|f| f.index as usize + 1).max().unwrap_or(0);
    let mut out = vec![vec![0u64; n]];
    for f in &prop.frozen {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=f.max).map(move |x| {
                    let mut v = v.clone();
                    v[f.index as usize] = x;
                    v
                })
            })
            .collect();
    }
    out
}

/// Breadth-first search of (design state, frozen values, pending residuals).
/// Exact for designs within `limits`.
pub fn explicit_cover(
    netlist: &FlatNetlist,
    assumptions: &[Expr],
    prop: &Property,
    limits: ExplicitLimits,
) -> Result<ExplicitResult, ExplicitError> {
    let frozen_bits: u64 = prop.frozen.iter().map(|f| u64::from(f.width)).sum();
    let state_bits = netlist.state_bits() + frozen_bits;
    if state_bits > limits.max_state_bits {
        return Err(ExplicitError::StateBits(state_bits));
    }
    let inputs: Vec<(SignalId, u32)> = netlist
        .free_inputs()
        .into_iter()
        .map(|id| (id, netlist.signal(id).width))
        .collect();
    let input_bits: u32 = inputs.iter().map(|(_, w)| *w).sum();
    if input_bits > limits.max_input_bits {
        return Err(ExplicitError::InputBits(input_bits));
    }
    let regs: Vec<SignalId> = netlist
        .state_signals()
        .filter(|s| s.kind == SignalKind::Register)
        .map(|s| s.id)
        .collect();
    let mems: Vec<SignalId> = netlist
        .state_signals()
        .filter(|s| s.kind == SignalKind::Memory)
        .map(|s| s.id)
        .collect();
    let matcher = Matcher::new(&prop.body);
    let mut set_ids: HashMap<BTreeSet<Re>, u32> = HashMap::new();
    let mut sets: Vec<BTreeSet<Re>> = Vec::new();
    let mut intern = |s: BTreeSet<Re>, sets: &mut Vec<BTreeSet<Re>>| -> u32 {
        *set_ids.entry(s.clone()).or_insert_with(|| {
            sets.push(s);
            (sets.len() - 1) as u32
        })
    };
    let empty = intern(BTreeSet::new(), &mut sets);
    let zero_state: Vec<u64> = regs
        .iter()
        .map(|_| 0)
        .chain(mems.iter().flat_map(|m| vec![0; netlist.signal(*m).depth as usize]))
        .collect();
    type Key = (Vec<u64>, Vec<u64>, u32);
    let mut seen: HashSet<Key> = HashSet::new();
    let mut queue: VecDeque<(Key, usize)> = VecDeque::new();
    for fv in frozen_valuations(prop) {
        let key = (zero_state.clone(), fv, empty);
        if seen.insert(key.clone()) {
            queue.push_back((key, 0));
        }
    }
    while let Some(((state, fv, set), depth)) = queue.pop_front() {
        for n in 0..(1u64 << input_bits) {
            let mut sim = Simulator::new(netlist);
            sim.set_frozen(fv.clone());
            let mut k = 0;
            for &r in &regs {
                sim.set_register(r, state[k]);
                k += 1;
            }
            for &m in &mems {
                for a in 0..netlist.signal(m).depth as usize {
                    sim.set_mem_word(m, a, state[k]);
                    k += 1;
                }
            }
            let mut shift = 0;
            let values: Vec<(SignalId, u64)> = inputs
                .iter()
                .map(|&(id, w)| {
                    let v = (n >> shift) & crate::hdl::netlist::mask(w);
                    shift += w;
                    (id, v)
                })
                .collect();
            sim.apply(&values);
            if assumptions.iter().any(|a| a.eval(&sim) == 0) {
                continue;
            }
            let letter = matcher.letter(&sim);
            let (next_set, hit) = advance(&matcher.root, &sets[set as usize], &letter);
            if hit {
                return Ok(ExplicitResult {
                    covered: true,
                    depth: Some(depth),
                    states: seen.len(),
                });
            }
            sim.tick();
            let mut next_state = Vec::with_capacity(state.len());
            next_state.extend(regs.iter().map(|&r| sim.value(r)));
            for &m in &mems {
                next_state.extend_from_slice(sim.mem(m));
            }
            let id = intern(next_set, &mut sets);
            let key = (next_state, fv.clone(), id);
            if !seen.contains(&key) {
                if seen.len() >= limits.max_states {
                    return Err(ExplicitError::States(limits.max_states));
                }
                seen.insert(key.clone());
                queue.push_back((key, depth + 1));
            }
        }
    }
    Ok(ExplicitResult {
        covered: false,
        depth: None,
        states: seen.len(),
    })
}
