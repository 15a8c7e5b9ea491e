//! Dynamic bit-range taint tracking alongside [`Simulator`].
//!
//! Taint follows exactly the explicit flows of [`flows`]: a flow whose mux
//! path is taken and whose source bits carry taint taints all its destination
//! bits. Sensitive ranges are tainted on every cycle; declassifiers never
//! hold taint.

use super::edges::{flows, Flow};
use super::labels::{BitRange, Labels};
use crate::hdl::netlist::mask;
use crate::hdl::{FlatNetlist, SignalId, SignalKind, Simulator, Target, Timing, ValueEnv};

pub struct TaintSim<'n> {
    sim: Simulator<'n>,
    labels: Labels,
    flows: Vec<Vec<Flow>>,
    taint: Vec<u64>,
    mem_taint: Vec<Vec<u64>>,
}

impl<'n> TaintSim<'n> {
    pub fn new(netlist: &'n FlatNetlist, labels: &Labels) -> Self {
        let flows = netlist
            .assignments
            .iter()
            .map(|a| flows(netlist, &a.source))
            .collect();
        let mem_taint = netlist
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
        let mut t = TaintSim {
            sim: Simulator::new(netlist),
            labels: labels.clone(),
            flows,
            taint: vec![0; netlist.signals.len()],
            mem_taint,
        };
        t.force_sources();
        t
    }

    pub fn sim(&self) -> &Simulator<'n> {
        &self.sim
    }

    pub fn sim_mut(&mut self) -> &mut Simulator<'n> {
        &mut self.sim
    }

    pub fn taint(&self, id: SignalId) -> u64 {
        self.taint[id.index()]
    }

    pub fn mem_taint(&self, id: SignalId) -> &[u64] {
        &self.mem_taint[id.index()]
    }

    /// Whether any bit of `r` (any word, for memories) is tainted.
    pub fn is_tainted(&self, r: &BitRange) -> bool {
        let m = r.mask();
        let words = &self.mem_taint[r.signal.index()];
        if words.is_empty() {
            self.taint[r.signal.index()] & m != 0
        } else {
            words.iter().any(|w| w & m != 0)
        }
    }

    fn force_sources(&mut self) {
        for s in &self.labels.sources {
            let m = s.mask();
            let words = &mut self.mem_taint[s.signal.index()];
            if words.is_empty() {
                self.taint[s.signal.index()] |= m;
            } else {
                words.iter_mut().for_each(|w| *w |= m);
            }
        }
    }

    fn flow_taint(&self, assignment: usize, dst_shift: u32) -> u64 {
        let mut t = 0;
        for f in &self.flows[assignment] {
            if f.cond.eval(&self.sim) == 0 {
                continue;
            }
            let src = match &f.src_addr {
                Some(addr) => {
                    let a = addr.eval(&self.sim) as usize;
                    self.mem_taint[f.src.signal.index()]
                        .get(a)
                        .copied()
                        .unwrap_or(0)
                }
                None => self.taint[f.src.signal.index()],
            };
            if src & f.src.mask() != 0 {
                t |= mask(f.dst_width) << (f.dst_lsb + dst_shift);
            }
        }
        t
    }

    /// Drives inputs and settles values and combinational taint.
    pub fn apply(&mut self, inputs: &[(SignalId, u64)]) {
        let netlist = self.sim.netlist();
        for &(id, v) in inputs {
            self.sim.set_input(id, v);
        }
        self.sim.settle();
        for s in netlist.inputs() {
            self.taint[s.id.index()] = 0;
        }
        for r in &self.labels.sources {
            if netlist.signal(r.signal).kind == SignalKind::Input {
                self.taint[r.signal.index()] |= r.mask();
            }
        }
        self.recompute_comb();
    }

    fn recompute_comb(&mut self) {
        let netlist = self.sim.netlist();
        for &s in netlist.comb_order() {
            let mut t = 0u64;
            for a in netlist.drivers(s) {
                if a.condition.eval(&self.sim) == 0 {
                    continue;
                }
                if let Target::Bits { lsb, width, .. } = a.target {
                    let m = mask(width) << lsb;
                    t = (t & !m) | (self.flow_taint(a.id, lsb) & m);
                }
            }
            if self.labels.declassifiers.contains(&s) {
                t = 0;
            }
            for r in &self.labels.sources {
                if r.signal == s {
                    t |= r.mask();
                }
            }
            self.taint[s.index()] = t;
        }
    }

    /// Latches values and taint.
    pub fn tick(&mut self) {
        let netlist = self.sim.netlist();
        let mut reg = Vec::new();
        let mut mem = Vec::new();
        for a in &netlist.assignments {
            if a.timing != Timing::Clocked || a.condition.eval(&self.sim) == 0 {
                continue;
            }
            match &a.target {
                Target::Bits { signal, lsb, width } => {
                    reg.push((*signal, mask(*width) << lsb, self.flow_taint(a.id, *lsb)));
                }
                Target::Word { memory, addr } => {
                    let addr = addr.eval(&self.sim);
                    if addr < u64::from(netlist.signal(*memory).depth) {
                        mem.push((*memory, addr as usize, self.flow_taint(a.id, 0)));
                    }
                }
            }
        }
        self.sim.tick();
        for (s, m, t) in reg {
            let v = &mut self.taint[s.index()];
            *v = (*v & !m) | (t & m);
        }
        for (s, addr, t) in mem {
            self.mem_taint[s.index()][addr] = t;
        }
        for &d in &self.labels.declassifiers {
            self.taint[d.index()] = 0;
            self.mem_taint[d.index()].iter_mut().for_each(|w| *w = 0);
        }
        self.force_sources();
    }
}

impl ValueEnv for TaintSim<'_> {
    fn signal(&self, id: SignalId) -> u64 {
        self.sim.signal(id)
    }

    fn mem_word(&self, id: SignalId, addr: u64) -> u64 {
        self.sim.mem_word(id, addr)
    }

    fn frozen(&self, index: u32) -> u64 {
        self.sim.frozen(index)
    }
}
