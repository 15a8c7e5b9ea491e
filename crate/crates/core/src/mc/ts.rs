//! Bit-level transition system of a netlist under invariant assumptions.

use std::collections::HashMap;

use thiserror::Error;

use super::aig::{Aig, AigLit};
use super::blast::{blast, constant, truthy, BitSource};
use crate::hdl::{Expr, FlatNetlist, SignalId, SignalKind, Target, Timing};
use crate::property::FrozenVar;

#[derive(Debug, Error)]
pub enum TsError {
    #[error("assumption `{0}` is not a 1-bit condition")]
    AssumptionWidth(String),
    #[error("assumption `{0}` references frozen variables")]
    AssumptionFrozen(String),
    #[error("design has {0} state bits, more than the limit of {1}")]
    TooLarge(u64, u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    Zero,
    /// Chosen freely at time zero (frozen variables).
    Free,
}

#[derive(Clone, Copy, Debug)]
pub struct Latch {
    pub var: AigLit,
    pub next: AigLit,
    pub init: Init,
}

/// What an AIG variable stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    Latch(usize),
    Input(usize),
}

#[derive(Clone, Debug)]
pub struct TransitionSystem {
    pub aig: Aig,
    pub latches: Vec<Latch>,
    pub inputs: Vec<AigLit>,
    /// Must hold in every cycle of a trace.
    pub constraints: Vec<AigLit>,
    /// Target of a cover query; `FALSE` until a monitor is attached.
    pub bad: AigLit,
    pub roles: Vec<VarRole>,
    signal_bits: Vec<Vec<AigLit>>,
    mem_bits: Vec<Vec<Vec<AigLit>>>,
    frozen_bits: HashMap<u32, Vec<AigLit>>,
    /// Input signals with the indices of their bits in `inputs`.
    pub input_map: Vec<(SignalId, Vec<usize>)>,
    /// Frozen variables with the latch index of each bit.
    pub frozen_map: Vec<(FrozenVar, Vec<usize>)>,
    /// Latch indices of each register's bits.
    pub register_map: Vec<(SignalId, Vec<usize>)>,
    /// First latch index belonging to a property monitor.
    pub monitor_start: usize,
}

impl BitSource for TransitionSystem {
    fn signal(&self, id: SignalId) -> &[AigLit] {
        &self.signal_bits[id.index()]
    }

    fn mem_words(&self, id: SignalId) -> &[Vec<AigLit>] {
        &self.mem_bits[id.index()]
    }

    fn frozen(&self, index: u32) -> &[AigLit] {
        self.frozen_bits
            .get(&index)
            .map(Vec::as_slice)
            .unwrap_or(&[AigLit::FALSE; 64])
    }
}

impl TransitionSystem {
    fn new_latch(&mut self, init: Init) -> (usize, AigLit) {
        let var = self.aig.new_var();
        let idx = self.latches.len();
        self.latches.push(Latch {
            var,
            next: var,
            init,
        });
        self.roles.push(VarRole::Latch(idx));
        (idx, var)
    }

    fn new_input(&mut self) -> (usize, AigLit) {
        let var = self.aig.new_var();
        let idx = self.inputs.len();
        self.inputs.push(var);
        self.roles.push(VarRole::Input(idx));
        (idx, var)
    }

    /// Bit-blasts an expression over the current-cycle values.
    pub fn blast(&mut self, e: &Expr) -> Vec<AigLit> {
        let mut aig = std::mem::take(&mut self.aig);
        let bits = blast(&mut aig, e, self);
        self.aig = aig;
        bits
    }

    pub fn blast_bool(&mut self, e: &Expr) -> AigLit {
        let bits = self.blast(e);
        let mut aig = std::mem::take(&mut self.aig);
        let b = truthy(&mut aig, &bits);
        self.aig = aig;
        b
    }

    /// Adds frozen variables as latches that keep their initial value, with
    /// the range constraint `f <= max`.
    pub fn add_frozen(&mut self, vars: &[FrozenVar]) {
        for v in vars {
            let mut bits = Vec::new();
            let mut idxs = Vec::new();
            for _ in 0..v.width {
                let (i, var) = self.new_latch(Init::Free);
                bits.push(var);
                idxs.push(i);
            }
            let max = constant(v.max, v.width);
            // f <= max  ==  !(max < f)
            let mut lt = AigLit::FALSE;
            for (&a, &b) in max.iter().zip(&bits) {
                let bit_lt = self.aig.and(!a, b);
                let same = self.aig.xnor(a, b);
                let keep = self.aig.and(same, lt);
                lt = self.aig.or(bit_lt, keep);
            }
            self.constraints.push(!lt);
            let mut padded = bits.clone();
            padded.resize(64, AigLit::FALSE);
            self.frozen_bits.insert(v.index, padded);
            self.frozen_map.push((*v, idxs));
        }
    }

    pub fn num_state_bits(&self) -> usize {
        self.latches.len()
    }

    /// Values of a register's bits under a latch valuation.
    pub fn register_value(&self, id: SignalId, latch_value: &dyn Fn(usize) -> bool) -> u64 {
        self.register_map
            .iter()
            .find(|(s, _)| *s == id)
            .map(|(_, idxs)| {
                idxs.iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, &l)| acc | (u64::from(latch_value(l)) << i))
            })
            .unwrap_or(0)
    }
}

/// Builds the transition system: registers and memory words become latches
/// that start at zero, top-level inputs become free inputs, and each
/// assumption becomes a per-cycle constraint.
pub fn compile_ts(netlist: &FlatNetlist, assumptions: &[Expr]) -> Result<TransitionSystem, TsError> {
    let mut ts = TransitionSystem {
        aig: Aig::new(),
        latches: Vec::new(),
        inputs: Vec::new(),
        constraints: Vec::new(),
        bad: AigLit::FALSE,
        roles: Vec::new(),
        signal_bits: vec![Vec::new(); netlist.signals.len()],
        mem_bits: vec![Vec::new(); netlist.signals.len()],
        frozen_bits: HashMap::new(),
        input_map: Vec::new(),
        frozen_map: Vec::new(),
        register_map: Vec::new(),
        monitor_start: 0,
    };
    for s in &netlist.signals {
        match s.kind {
            SignalKind::Input => {
                let mut bits = Vec::new();
                let mut idxs = Vec::new();
                if Some(s.id) == netlist.clock {
                    bits = vec![AigLit::FALSE; s.width as usize];
                } else {
                    for _ in 0..s.width {
                        let (i, v) = ts.new_input();
                        bits.push(v);
                        idxs.push(i);
                    }
                    ts.input_map.push((s.id, idxs));
                }
                ts.signal_bits[s.id.index()] = bits;
            }
            SignalKind::Register => {
                let mut bits = Vec::new();
                let mut idxs = Vec::new();
                for _ in 0..s.width {
                    let (i, v) = ts.new_latch(Init::Zero);
                    bits.push(v);
                    idxs.push(i);
                }
                ts.signal_bits[s.id.index()] = bits;
                ts.register_map.push((s.id, idxs));
            }
            SignalKind::Memory => {
                let words = (0..s.depth)
                    .map(|_| (0..s.width).map(|_| ts.new_latch(Init::Zero).1).collect())
                    .collect();
                ts.mem_bits[s.id.index()] = words;
            }
            SignalKind::Wire | SignalKind::Output => {}
        }
    }
    for &s in netlist.comb_order() {
        let w = netlist.signal(s).width as usize;
        let mut bits = vec![AigLit::FALSE; w];
        for a in netlist.drivers(s) {
            if let Target::Bits { lsb, width, .. } = a.target {
                let c = ts.blast_bool(&a.condition);
                let src = ts.blast(&a.source);
                for i in 0..width as usize {
                    let b = &mut bits[lsb as usize + i];
                    *b = ts.aig.mux(c, src[i], *b);
                }
            }
        }
        ts.signal_bits[s.index()] = bits;
    }
    // next state, in assignment order so later writes win
    let mut reg_next: HashMap<SignalId, Vec<AigLit>> = HashMap::new();
    let mut mem_next: HashMap<SignalId, Vec<Vec<AigLit>>> = HashMap::new();
    for a in netlist.assignments.iter().filter(|a| a.timing == Timing::Clocked) {
        let c = ts.blast_bool(&a.condition);
        let src = ts.blast(&a.source);
        match &a.target {
            Target::Bits { signal, lsb, width } => {
                let cur = reg_next
                    .entry(*signal)
                    .or_insert_with(|| ts.signal_bits[signal.index()].clone());
                for i in 0..*width as usize {
                    let b = &mut cur[*lsb as usize + i];
                    *b = ts.aig.mux(c, src[i], *b);
                }
            }
            Target::Word { memory, addr } => {
                let addr = ts.blast(addr);
                let cur = mem_next
                    .entry(*memory)
                    .or_insert_with(|| ts.mem_bits[memory.index()].clone());
                for (j, word) in cur.iter_mut().enumerate() {
                    let hit = addr_is(&mut ts.aig, &addr, j as u64);
                    let sel = ts.aig.and(c, hit);
                    for (b, &d) in word.iter_mut().zip(&src) {
                        *b = ts.aig.mux(sel, d, *b);
                    }
                }
            }
        }
    }
    for (sig, next) in reg_next {
        let cur = ts.signal_bits[sig.index()].clone();
        for (v, n) in cur.iter().zip(next) {
            set_next(&mut ts, *v, n);
        }
    }
    for (mem, next) in mem_next {
        let cur = ts.mem_bits[mem.index()].clone();
        for (vw, nw) in cur.iter().zip(next) {
            for (v, n) in vw.iter().zip(nw) {
                set_next(&mut ts, *v, n);
            }
        }
    }
    for a in assumptions {
        if a.width != 1 {
            return Err(TsError::AssumptionWidth(netlist.render(a)));
        }
        if !a.frozen_vars().is_empty() {
            return Err(TsError::AssumptionFrozen(netlist.render(a)));
        }
        let c = ts.blast_bool(a);
        ts.constraints.push(c);
    }
    ts.monitor_start = ts.latches.len();
    Ok(ts)
}

fn addr_is(g: &mut Aig, addr: &[AigLit], v: u64) -> AigLit {
    if addr.len() < 64 && v >> addr.len() != 0 {
        return AigLit::FALSE;
    }
    let bits: Vec<AigLit> = addr
        .iter()
        .enumerate()
        .map(|(i, &b)| if (v >> i) & 1 == 1 { b } else { !b })
        .collect();
    g.and_all(bits)
}

fn set_next(ts: &mut TransitionSystem, var: AigLit, next: AigLit) {
    if let super::aig::Node::Var(i) = ts.aig.node(var.node()) {
        if let VarRole::Latch(l) = ts.roles[i as usize] {
            ts.latches[l].next = next;
        }
    }
}
