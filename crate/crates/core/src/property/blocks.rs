use crate::hdl::{netlist::clog2, BinaryOp, Expr, FlatNetlist, SignalId, SignalKind, Target, Timing};
use crate::ifa::{AssignmentEdge, BitRange, LeakagePath};

use super::seq::{BoolCond, CondKind, FrozenVar, Origin, PropKind, Property, TemporalSeq};

/// Path segment traversed in a single cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequentialBlock {
    pub edges: Vec<AssignmentEdge>,
    /// State element written by the last edge; `None` only for a final block
    /// that ends in combinational logic.
    pub terminator: Option<BitRange>,
}

/// Cuts a path after every sequential edge.
pub fn split_blocks(path: &LeakagePath) -> Vec<SequentialBlock> {
    let mut blocks = Vec::new();
    let mut cur = Vec::new();
    for e in &path.edges {
        cur.push(e.clone());
        if e.sequential {
            blocks.push(SequentialBlock {
                edges: std::mem::take(&mut cur),
                terminator: Some(e.to),
            });
        }
    }
    if !cur.is_empty() {
        blocks.push(SequentialBlock {
            edges: cur,
            terminator: None,
        });
    }
    blocks
}

/// OR of the conditions under which `edge` forwards data.
pub fn active_condition(edge: &AssignmentEdge) -> BoolCond {
    BoolCond::new(edge.condition.clone(), CondKind::Active)
}

fn addr_matches(addr: &Expr, frozen: &Expr) -> Expr {
    let w = addr.width.max(frozen.width);
    Expr::binary(
        BinaryOp::Eq,
        addr.clone().resize(w, false),
        frozen.clone().resize(w, false),
    )
}

/// Edge condition restricted to reading (`reading`) or writing the memory
/// word named by `frozen`.
fn memory_active(edge: &AssignmentEdge, frozen: &Expr, reading: bool) -> Expr {
    Expr::any(edge.alternatives.iter().map(|alt| {
        let addr = if reading { &alt.src_addr } else { &alt.dst_addr };
        match addr {
            Some(a) => alt.condition.clone().and(addr_matches(a, frozen)),
            None => alt.condition.clone(),
        }
    }))
}

/// No clocked assignment overwrites any bit of `range` this cycle.
pub fn alive_range(netlist: &FlatNetlist, range: &BitRange) -> BoolCond {
    let writes = netlist.drivers(range.signal).filter_map(|a| match (&a.target, a.timing) {
        (Target::Bits { lsb, width, .. }, Timing::Clocked)
            if *lsb < range.lsb + range.width && range.lsb < lsb + width =>
        {
            Some(a.condition.clone())
        }
        _ => None,
    });
    BoolCond::new(Expr::any(writes).not(), CondKind::Alive)
}

/// No clocked assignment overwrites `reg` this cycle.
pub fn alive_condition(netlist: &FlatNetlist, reg: SignalId) -> BoolCond {
    alive_range(netlist, &BitRange::full(netlist, reg))
}

/// No write hits word `frozen` of `memory` this cycle.
pub fn alive_word(netlist: &FlatNetlist, memory: SignalId, frozen: &Expr) -> BoolCond {
    let writes = netlist.drivers(memory).filter_map(|a| match &a.target {
        Target::Word { addr, .. } => Some(a.condition.clone().and(addr_matches(addr, frozen))),
        Target::Bits { .. } => None,
    });
    BoolCond::new(Expr::any(writes).not(), CondKind::Alive)
}

fn fuse_all(conds: Vec<Expr>) -> TemporalSeq {
    let mut it = conds
        .into_iter()
        .filter(|c| !c.is_true())
        .map(|c| TemporalSeq::atom(c, CondKind::Active));
    match it.next() {
        None => TemporalSeq::atom(Expr::bool_const(true), CondKind::BlockActive),
        Some(first) => it.fold(first, TemporalSeq::fuse),
    }
}

/// Composes block activations, separated by the alive condition of the state
/// element that links consecutive blocks.
///
/// Only conditional edges contribute atoms; a block without any becomes the
/// constant `true`. A block ending in a memory allocates one frozen address
/// variable that ties the write, the hold and the later read to one word.
pub fn build_sequence(netlist: &FlatNetlist, blocks: &[SequentialBlock]) -> (TemporalSeq, Vec<FrozenVar>) {
    let mut frozen = Vec::new();
    let mut seq: Option<TemporalSeq> = None;
    let mut incoming: Option<Expr> = None;
    for (i, block) in blocks.iter().enumerate() {
        let last = i + 1 == blocks.len();
        let term_memory = block
            .terminator
            .filter(|t| !last && netlist.signal(t.signal).kind == SignalKind::Memory);
        let outgoing = term_memory.map(|t| {
            let s = netlist.signal(t.signal);
            let var = FrozenVar {
                index: frozen.len() as u32,
                width: clog2(u64::from(s.depth)).max(1),
                max: u64::from(s.depth) - 1,
            };
            frozen.push(var);
            Expr::frozen(var.index, var.width)
        });
        let n = block.edges.len();
        let conds = block
            .edges
            .iter()
            .enumerate()
            .map(|(j, e)| {
                let mut c = e.condition.clone();
                if j == 0 {
                    if let Some(f) = &incoming {
                        c = memory_active(e, f, true);
                    }
                }
                if j + 1 == n {
                    if let Some(f) = &outgoing {
                        let w = memory_active(e, f, false);
                        c = if j == 0 && incoming.is_some() {
                            c.and(w)
                        } else {
                            w
                        };
                    }
                }
                c
            })
            .collect();
        let act = fuse_all(conds);
        seq = Some(match seq {
            None => act,
            Some(s) => TemporalSeq::concat(s, act),
        });
        if !last {
            let term = block.terminator.expect("non-final block ends in state");
            let alive = match &outgoing {
                Some(f) => alive_word(netlist, term.signal, f),
                None => alive_range(netlist, &term),
            };
            let rep = TemporalSeq::rep(TemporalSeq::Atom(alive));
            seq = Some(TemporalSeq::concat(seq.take().expect("set above"), rep));
        }
        incoming = outgoing;
    }
    (
        seq.unwrap_or_else(|| TemporalSeq::atom(Expr::bool_const(true), CondKind::BlockActive)),
        frozen,
    )
}

/// The cover property of one leakage path, named `cover_<path id>`.
pub fn path_property(netlist: &FlatNetlist, path: &LeakagePath) -> Property {
    let blocks = split_blocks(path);
    let (body, frozen) = build_sequence(netlist, &blocks);
    Property {
        name: format!("cover_{}", path.id),
        kind: PropKind::Cover,
        origin: Origin::Path(path.id.clone()),
        body,
        frozen,
    }
}
