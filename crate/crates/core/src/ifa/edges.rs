//! Bit-range flow edges extracted from flattened assignments.
//!
//! Only explicit flows are tracked: a signal that merely selects between
//! values (mux select, branch condition, bit-select index, memory address)
//! contributes to an edge's condition, not an edge of its own.

use std::collections::BTreeMap;

use serde::Serialize;

use super::labels::BitRange;
use crate::hdl::{Expr, ExprKind, FlatNetlist, SignalId, Target, Timing};

/// Part of an expression's value that carries bits of `src`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flow {
    pub src: BitRange,
    /// Bits of the expression result that depend on `src`.
    pub dst_lsb: u32,
    pub dst_width: u32,
    /// Bit `dst_lsb + i` copies bit `src.lsb + i` (selects and concatenation).
    pub aligned: bool,
    /// Mux selections under which the flow exists.
    pub cond: Expr,
    /// Address of the word read when `src` is a memory.
    pub src_addr: Option<Expr>,
}

impl Flow {
    fn clip(mut self, width: u32) -> Option<Flow> {
        if self.dst_lsb >= width {
            return None;
        }
        let keep = self.dst_width.min(width - self.dst_lsb);
        if self.aligned {
            self.src.width = keep;
        }
        self.dst_width = keep;
        Some(self)
    }

    fn smear(mut self, width: u32) -> Flow {
        self.dst_lsb = 0;
        self.dst_width = width;
        self.aligned = false;
        self
    }
}

/// Explicit flows of `e` into its result bits.
pub fn flows(netlist: &FlatNetlist, e: &Expr) -> Vec<Flow> {
    let mut out = Vec::new();
    collect(netlist, e, &mut out);
    out
}

fn leaf(src: BitRange, width: u32, aligned: bool, src_addr: Option<Expr>) -> Flow {
    Flow {
        src,
        dst_lsb: 0,
        dst_width: width,
        aligned,
        cond: Expr::bool_const(true),
        src_addr,
    }
}

fn collect(n: &FlatNetlist, e: &Expr, out: &mut Vec<Flow>) {
    match &e.kind {
        ExprKind::Const(_) | ExprKind::Frozen(_) => {}
        ExprKind::Signal(s) => out.push(leaf(BitRange::full(n, *s), e.width, true, None)),
        ExprKind::Slice(s, lsb) => out.push(leaf(
            BitRange {
                signal: *s,
                lsb: *lsb,
                width: e.width,
            },
            e.width,
            true,
            None,
        )),
        ExprKind::BitSel(s, _) => out.push(leaf(BitRange::full(n, *s), 1, false, None)),
        ExprKind::MemRead(m, addr) => out.push(leaf(
            BitRange::full(n, *m),
            e.width,
            true,
            Some((**addr).clone()),
        )),
        ExprKind::Unary(_, a) => {
            for f in flows(n, a) {
                out.push(f.smear(e.width));
            }
        }
        ExprKind::Binary(_, a, b) => {
            for f in flows(n, a).into_iter().chain(flows(n, b)) {
                out.push(f.smear(e.width));
            }
        }
        ExprKind::Mux(c, a, b) => {
            let on = (**c).clone().truthy();
            let off = (**c).clone().falsy();
            for mut f in flows(n, a) {
                f.cond = on.clone().and(f.cond);
                out.push(f);
            }
            for mut f in flows(n, b) {
                f.cond = off.clone().and(f.cond);
                out.push(f);
            }
        }
        ExprKind::Concat(items) => {
            let mut offset = e.width;
            for item in items {
                offset -= item.width;
                for mut f in flows(n, item) {
                    f.dst_lsb += offset;
                    out.push(f);
                }
            }
        }
        ExprKind::Resize(a, signed) => {
            for f in flows(n, a) {
                if *signed && e.width > a.width && f.dst_lsb + f.dst_width == a.width {
                    let mut f = f;
                    f.dst_width = e.width - f.dst_lsb;
                    f.aligned = false;
                    out.push(f);
                } else if let Some(f) = f.clip(e.width) {
                    out.push(f);
                }
            }
        }
    }
}

/// One way an edge can fire: an assignment and the mux path inside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeAlt {
    pub assignment: usize,
    pub condition: Expr,
    /// Memory word read when the source is a memory.
    pub src_addr: Option<Expr>,
    /// Memory word written when the target is a memory.
    pub dst_addr: Option<Expr>,
}

/// A direct flow `from → to`, merged over every assignment and mux path that
/// realises it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentEdge {
    pub id: usize,
    pub from: BitRange,
    pub to: BitRange,
    /// Disjunction of the alternatives' conditions.
    pub condition: Expr,
    pub sequential: bool,
    pub alternatives: Vec<EdgeAlt>,
}

impl AssignmentEdge {
    pub fn is_conditional(&self) -> bool {
        !self.condition.is_true()
    }

    pub fn assignment_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.alternatives.iter().map(|a| a.assignment).collect();
        ids.dedup();
        ids
    }
}

#[derive(Clone, Debug)]
pub struct EdgeGraph {
    pub edges: Vec<AssignmentEdge>,
    out: Vec<Vec<usize>>,
}

impl EdgeGraph {
    pub fn build(netlist: &FlatNetlist) -> Self {
        type Key = (String, u32, u32, String, u32, u32);
        let mut merged: BTreeMap<Key, AssignmentEdge> = BTreeMap::new();
        for a in &netlist.assignments {
            let (signal, base, dst_addr) = match &a.target {
                Target::Bits { signal, lsb, .. } => (*signal, *lsb, None),
                Target::Word { memory, addr } => (*memory, 0, Some(addr.clone())),
            };
            for f in flows(netlist, &a.source) {
                let to = BitRange {
                    signal,
                    lsb: base + f.dst_lsb,
                    width: f.dst_width,
                };
                let key = (
                    netlist.name(f.src.signal).to_string(),
                    f.src.lsb,
                    f.src.width,
                    netlist.name(signal).to_string(),
                    to.lsb,
                    to.width,
                );
                let condition = a.condition.clone().and(f.cond);
                if condition.is_false() {
                    continue;
                }
                let alt = EdgeAlt {
                    assignment: a.id,
                    condition: condition.clone(),
                    src_addr: f.src_addr,
                    dst_addr: dst_addr.clone(),
                };
                let edge = merged.entry(key).or_insert_with(|| AssignmentEdge {
                    id: 0,
                    from: f.src,
                    to,
                    condition: Expr::bool_const(false),
                    sequential: a.timing == Timing::Clocked,
                    alternatives: Vec::new(),
                });
                edge.condition = std::mem::replace(&mut edge.condition, Expr::bool_const(false))
                    .or(condition);
                edge.sequential |= a.timing == Timing::Clocked;
                edge.alternatives.push(alt);
            }
        }
        let mut edges: Vec<AssignmentEdge> = merged.into_values().collect();
        let mut out = vec![Vec::new(); netlist.signals.len()];
        for (i, e) in edges.iter_mut().enumerate() {
            e.id = i;
            out[e.from.signal.index()].push(i);
        }
        EdgeGraph { edges, out }
    }

    /// Edges leaving any bit of `signal`, by ascending id.
    pub fn outgoing(&self, signal: SignalId) -> &[usize] {
        &self.out[signal.index()]
    }

    pub fn edge(&self, id: usize) -> &AssignmentEdge {
        &self.edges[id]
    }
}

/// JSON view of an edge with names instead of ids.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeRecord {
    pub id: usize,
    pub from: String,
    pub to: String,
    pub condition: String,
    pub sequential: bool,
    pub assignments: Vec<usize>,
}

impl EdgeRecord {
    pub fn new(netlist: &FlatNetlist, e: &AssignmentEdge) -> Self {
        EdgeRecord {
            id: e.id,
            from: e.from.display(netlist).to_string(),
            to: e.to.display(netlist).to_string(),
            condition: netlist.render(&e.condition),
            sequential: e.sequential,
            assignments: e.assignment_ids(),
        }
    }
}
