//! Cycle-accurate word-level simulation of a [`FlatNetlist`].
//!
//! One cycle is: drive inputs, [`Simulator::settle`] the combinational logic,
//! observe, then [`Simulator::tick`] to latch the next state. Registers and
//! memories start at zero.

use super::netlist::{mask, FlatNetlist, SignalId, SignalKind, Target, Timing, ValueEnv};

#[derive(Clone)]
pub struct Simulator<'n> {
    netlist: &'n FlatNetlist,
    values: Vec<u64>,
    mems: Vec<Vec<u64>>,
    frozen: Vec<u64>,
}

impl<'n> Simulator<'n> {
    pub fn new(netlist: &'n FlatNetlist) -> Self {
        let mems = netlist
            .signals
            .iter()
            .map(|s| {
                if s.kind == SignalKind::Memory {
                    vec![0; s.depth as usize]
                } else {
                    Vec::new()
                }
            })
            .collect();
        Simulator {
            netlist,
            values: vec![0; netlist.signals.len()],
            mems,
            frozen: Vec::new(),
        }
    }

    pub fn netlist(&self) -> &'n FlatNetlist {
        self.netlist
    }

    pub fn set_frozen(&mut self, values: Vec<u64>) {
        self.frozen = values;
    }

    pub fn set_input(&mut self, id: SignalId, value: u64) {
        let s = self.netlist.signal(id);
        debug_assert_eq!(s.kind, SignalKind::Input, "{}", s.name);
        self.values[id.index()] = value & mask(s.width);
    }

    /// Overwrites a register (used to start from a non-reset state).
    pub fn set_register(&mut self, id: SignalId, value: u64) {
        let s = self.netlist.signal(id);
        self.values[id.index()] = value & mask(s.width);
    }

    pub fn set_mem_word(&mut self, id: SignalId, addr: usize, value: u64) {
        let w = self.netlist.signal(id).width;
        self.mems[id.index()][addr] = value & mask(w);
    }

    pub fn value(&self, id: SignalId) -> u64 {
        self.values[id.index()]
    }

    pub fn mem(&self, id: SignalId) -> &[u64] {
        &self.mems[id.index()]
    }

    /// Recomputes every combinational signal from inputs and state.
    pub fn settle(&mut self) {
        for &s in self.netlist.comb_order() {
            let mut v = 0u64;
            for a in self.netlist.drivers(s) {
                if a.condition.eval(self) == 0 {
                    continue;
                }
                if let Target::Bits { lsb, width, .. } = a.target {
                    let m = mask(width) << lsb;
                    v = (v & !m) | ((a.source.eval(self) << lsb) & m);
                }
            }
            self.values[s.index()] = v;
        }
    }

    /// Latches the next state computed from the current (settled) values.
    pub fn tick(&mut self) {
        let mut reg_updates = Vec::new();
        let mut mem_updates = Vec::new();
        for a in &self.netlist.assignments {
            if a.timing != Timing::Clocked || a.condition.eval(self) == 0 {
                continue;
            }
            let data = a.source.eval(self);
            match &a.target {
                Target::Bits { signal, lsb, width } => {
                    reg_updates.push((*signal, *lsb, *width, data));
                }
                Target::Word { memory, addr } => {
                    let addr = addr.eval(self);
                    if addr < u64::from(self.netlist.signal(*memory).depth) {
                        mem_updates.push((*memory, addr as usize, data));
                    }
                }
            }
        }
        for (s, lsb, width, data) in reg_updates {
            let m = mask(width) << lsb;
            let v = &mut self.values[s.index()];
            *v = (*v & !m) | ((data << lsb) & m);
        }
        for (s, addr, data) in mem_updates {
            self.mems[s.index()][addr] = data;
        }
    }

    /// Drives `inputs`, settles, and returns; call [`Self::tick`] to advance.
    pub fn apply(&mut self, inputs: &[(SignalId, u64)]) {
        for &(id, v) in inputs {
            self.set_input(id, v);
        }
        self.settle();
    }
}

impl ValueEnv for Simulator<'_> {
    fn signal(&self, id: SignalId) -> u64 {
        self.values[id.index()]
    }

    fn mem_word(&self, id: SignalId, addr: u64) -> u64 {
        self.mems[id.index()].get(addr as usize).copied().unwrap_or(0)
    }

    fn frozen(&self, index: u32) -> u64 {
        self.frozen.get(index as usize).copied().unwrap_or(0)
    }
}
