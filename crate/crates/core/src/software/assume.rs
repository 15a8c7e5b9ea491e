//! Assumption sets that restrict the model checker to behaviour a concrete
//! program can produce.
//!
//! The modes form a chain; each adds constraints to the previous one:
//!
//! | mode  | adds                                                           |
//! |-------|----------------------------------------------------------------|
//! | None  | nothing                                                        |
//! | Legal | fetched word decodes to a legal instruction                    |
//! | Used  | fetched word is one of the program's encodings                 |
//! | Jumps | fetch port is a lookup table of the image; return targets and  |
//! |       | hardware-loop bounds come from the program metadata            |
//! | Stack | returns go to the address pushed by the matching call          |

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::asm::ProgramImage;
use super::isa::{legal_patterns, Class};
use crate::hdl::{
    attach, elaborate_with, parse_rtl, BinaryOp, ElabOptions, Expr, FlatNetlist, SignalId, SignalKind, Simulator, ValueEnv,
};
use crate::property::{Property, PropKind};

/// Names of the core signals the generators constrain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreInterface {
    /// Program-memory address output.
    pub fetch_addr: String,
    /// Program-memory read data input.
    pub fetch_data: String,
    pub is_call: String,
    /// Address a call returns to.
    pub call_return: String,
    pub is_return: String,
    pub return_target: String,
    pub loop_start: String,
    pub loop_end: String,
    pub loop_count: String,
}

impl CoreInterface {
    pub fn from_toml(text: &str) -> Result<Self, AssumeError> {
        toml::from_str(text).map_err(|e| AssumeError::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    None,
    Legal,
    Used,
    Jumps,
    Stack,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::None, Mode::Legal, Mode::Used, Mode::Jumps, Mode::Stack];

    pub fn name(self) -> &'static str {
        match self {
            Mode::None => "none",
            Mode::Legal => "legal",
            Mode::Used => "used",
            Mode::Jumps => "jumps",
            Mode::Stack => "stack",
        }
    }

    pub fn needs_program(self) -> bool {
        self >= Mode::Used
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = AssumeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AssumeError::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssumeError {
    #[error("invalid interface file: {0}")]
    Config(String),
    #[error("interface signal `{0}` not found in the design")]
    UnknownSignal(String),
    #[error("interface signal `{name}` must be {want}")]
    BadSignal { name: String, want: String },
    #[error("mode {0} needs a program image")]
    NoProgram(Mode),
    #[error("the program image is empty")]
    EmptyProgram,
    #[error("program metadata incomplete: {0}")]
    MissingMetadata(String),
    #[error("program memory `{0}` is not a primary input; writable program memory is not supported")]
    WritableProgramMemory(String),
    #[error("call depth {need} exceeds the stack depth {depth}")]
    StackTooShallow { need: usize, depth: usize },
    #[error("the program's call graph is recursive")]
    Recursive,
    #[error("auxiliary design: {0}")]
    Aux(String),
    #[error("mode {later} drops constraint `{name}` of mode {earlier}")]
    NotIncluded { earlier: Mode, later: Mode, name: String },
}

/// Auxiliary state merged into the design for a mode.
#[derive(Clone, Debug)]
pub struct AuxState {
    /// Instance prefix of the merged signals.
    pub prefix: String,
    /// The design with the auxiliary logic merged in; base signal ids are
    /// unchanged.
    pub netlist: FlatNetlist,
    /// Raised once the auxiliary stack has overflowed; witnesses that end
    /// with it set are reported as capacity problems.
    pub overflow: Option<SignalId>,
}

#[derive(Clone, Debug)]
pub struct AssumptionSet {
    pub mode: Mode,
    pub constraints: Vec<Property>,
    pub aux: Option<AuxState>,
}

impl AssumptionSet {
    pub fn empty(mode: Mode) -> Self {
        AssumptionSet {
            mode,
            constraints: Vec::new(),
            aux: None,
        }
    }

    /// Design to check: the base design, or the one with auxiliary state.
    pub fn design<'a>(&'a self, base: &'a FlatNetlist) -> &'a FlatNetlist {
        self.aux.as_ref().map_or(base, |a| &a.netlist)
    }

    pub fn invariants(&self) -> Vec<Expr> {
        self.constraints
            .iter()
            .filter_map(|p| p.invariant().cloned())
            .collect()
    }

    /// First constraint violated by a settled design state.
    pub fn violated(&self, env: &impl ValueEnv) -> Option<&Property> {
        self.constraints
            .iter()
            .find(|p| p.invariant().is_some_and(|e| e.eval(env) == 0))
    }

    fn push(&mut self, name: &str, cond: Expr) {
        self.constraints
            .push(Property::assume(name, self.mode.name(), cond));
    }

    fn extend_from(&mut self, earlier: &AssumptionSet) {
        self.constraints.extend(earlier.constraints.iter().map(|p| {
            let mut p = p.clone();
            debug_assert_eq!(p.kind, PropKind::Assume);
            p.origin = crate::property::Origin::Mode(self.mode.name().to_string());
            p
        }));
    }
}

/// Checks that every set keeps all constraints of the sets before it.
pub fn check_inclusion(chain: &[&AssumptionSet]) -> Result<(), AssumeError> {
    for w in chain.windows(2) {
        let later: Vec<(&str, &crate::property::TemporalSeq)> =
            w[1].constraints.iter().map(|p| (p.name.as_str(), &p.body)).collect();
        for p in &w[0].constraints {
            if !later.contains(&(p.name.as_str(), &p.body)) {
                return Err(AssumeError::NotIncluded {
                    earlier: w[0].mode,
                    later: w[1].mode,
                    name: p.name.clone(),
                });
            }
        }
    }
    Ok(())
}

struct Ports<'a> {
    netlist: &'a FlatNetlist,
}

impl Ports<'_> {
    fn get(&self, name: &str) -> Result<Expr, AssumeError> {
        let id = self
            .netlist
            .lookup(name)
            .ok_or_else(|| AssumeError::UnknownSignal(name.to_string()))?;
        let s = self.netlist.signal(id);
        if s.kind == SignalKind::Memory {
            return Err(AssumeError::BadSignal {
                name: name.to_string(),
                want: "a vector, not a memory".into(),
            });
        }
        Ok(Expr::signal(id, s.width))
    }

    fn bit(&self, name: &str) -> Result<Expr, AssumeError> {
        let e = self.get(name)?;
        if e.width != 1 {
            return Err(AssumeError::BadSignal {
                name: name.to_string(),
                want: "one bit wide".into(),
            });
        }
        Ok(e)
    }

    fn word(&self, name: &str) -> Result<Expr, AssumeError> {
        let e = self.get(name)?;
        if e.width != 32 {
            return Err(AssumeError::BadSignal {
                name: name.to_string(),
                want: "32 bits wide".into(),
            });
        }
        Ok(e)
    }
}

fn eq_const(e: &Expr, v: u64) -> Expr {
    Expr::eq(e.clone(), Expr::constant(v, e.width))
}

/// The fetched word matches one of the legal encoding patterns.
pub fn legal_constraint(netlist: &FlatNetlist, iface: &CoreInterface) -> Result<Expr, AssumeError> {
    let data = Ports { netlist }.word(&iface.fetch_data)?;
    Ok(Expr::any(legal_patterns().into_iter().map(|(mask, value, _)| {
        let masked = Expr::binary(BinaryOp::And, data.clone(), Expr::constant(u64::from(mask), 32));
        eq_const(&masked, u64::from(value))
    })))
}

pub fn gen_legal(netlist: &FlatNetlist, iface: &CoreInterface) -> Result<AssumptionSet, AssumeError> {
    let mut set = AssumptionSet::empty(Mode::Legal);
    set.push("legal_instr", legal_constraint(netlist, iface)?);
    Ok(set)
}

/// The fetched word is one of the program's encodings, in any order.
pub fn gen_used(netlist: &FlatNetlist, iface: &CoreInterface, program: &ProgramImage) -> Result<AssumptionSet, AssumeError> {
    let encodings = program.encodings();
    if encodings.is_empty() {
        return Err(AssumeError::EmptyProgram);
    }
    let data = Ports { netlist }.word(&iface.fetch_data)?;
    let mut set = AssumptionSet::empty(Mode::Used);
    set.extend_from(&gen_legal(netlist, iface)?);
    set.push(
        "used_instr",
        Expr::any(encodings.into_iter().map(|w| eq_const(&data, u64::from(w)))),
    );
    Ok(set)
}

/// Program memory as a fixed lookup table: the fetched word is the image
/// word at the fetch address, and zero (illegal) between words.
pub fn gen_memory_table(netlist: &FlatNetlist, iface: &CoreInterface, program: &ProgramImage) -> Result<Property, AssumeError> {
    if program.words.is_empty() {
        return Err(AssumeError::EmptyProgram);
    }
    let ports = Ports { netlist };
    let data = ports.word(&iface.fetch_data)?;
    let addr = ports.word(&iface.fetch_addr)?;
    let id = netlist.lookup(&iface.fetch_data).expect("checked");
    if netlist.signal(id).kind != SignalKind::Input {
        return Err(AssumeError::WritableProgramMemory(iface.fetch_data.clone()));
    }
    let table = program
        .words
        .iter()
        .rev()
        .fold(Expr::constant(0, 32), |rest, (&a, &w)| {
            Expr::mux(eq_const(&addr, u64::from(a)), Expr::constant(u64::from(w), 32), rest)
        });
    Ok(Property::assume("fetch_table", Mode::Jumps.name(), Expr::eq(data, table)))
}

/// Every call, return and loop setup in the image must be described by the
/// metadata; an image loaded without it cannot be constrained.
fn check_metadata(program: &ProgramImage) -> Result<(), AssumeError> {
    let calls: BTreeSet<u32> = program.call_sites.iter().map(|c| c.call).collect();
    let loops: BTreeSet<u32> = program.hwloops.iter().map(|l| l.start - 4).collect();
    for ins in program.instructions() {
        match ins.class {
            Class::Call if !calls.contains(&ins.address) => {
                return Err(AssumeError::MissingMetadata(format!("no call site for {:#x}", ins.address)))
            }
            Class::Hwloop if !loops.contains(&ins.address) => {
                return Err(AssumeError::MissingMetadata(format!("no hardware loop for {:#x}", ins.address)))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Mode Jumps: Used, the fetch lookup table, return targets limited to the
/// return addresses of call sites, and hardware-loop bounds limited to the
/// program's loops (or the reset state).
pub fn gen_jump_constraints(netlist: &FlatNetlist, iface: &CoreInterface, program: &ProgramImage) -> Result<AssumptionSet, AssumeError> {
    check_metadata(program)?;
    let ports = Ports { netlist };
    let mut set = AssumptionSet::empty(Mode::Jumps);
    set.extend_from(&gen_used(netlist, iface, program)?);
    set.constraints.push(gen_memory_table(netlist, iface, program)?);

    let is_ret = ports.bit(&iface.is_return)?;
    let target = ports.word(&iface.return_target)?;
    let targets = Expr::any(
        program
            .return_addresses()
            .into_iter()
            .map(|a| eq_const(&target, u64::from(a))),
    );
    set.push("return_targets", is_ret.not().or(targets));

    let start = ports.word(&iface.loop_start)?;
    let end = ports.word(&iface.loop_end)?;
    let count = ports.get(&iface.loop_count)?;
    let idle = Expr::all([eq_const(&start, 0), eq_const(&end, 0), eq_const(&count, 0)]);
    let known = Expr::any(program.hwloops.iter().map(|l| {
        eq_const(&start, u64::from(l.start)).and(eq_const(&end, u64::from(l.end)))
    }));
    set.push("hwloop_bounds", idle.or(known));
    Ok(set)
}

/// Return-address stack bound to the call and return events.
pub const CALL_STACK_RTL: &str = include_str!("../../fixtures/minirv/callstack.v");

/// Mode Stack: Jumps plus a `depth`-entry return-address stack that pushes
/// on every call and requires each return to go to the top entry.
pub fn gen_call_stack(
    netlist: &FlatNetlist,
    iface: &CoreInterface,
    program: &ProgramImage,
    depth: usize,
) -> Result<AssumptionSet, AssumeError> {
    let need = program.call_depth().ok_or(AssumeError::Recursive)?;
    if depth < need || depth == 0 {
        return Err(AssumeError::StackTooShallow { need, depth });
    }
    let jumps = gen_jump_constraints(netlist, iface, program)?;
    let ports = Ports { netlist };
    let tree = parse_rtl(CALL_STACK_RTL).map_err(|e| AssumeError::Aux(e.to_string()))?;
    let spw = 64 - (depth as u64).leading_zeros();
    let aux = elaborate_with(
        &tree,
        &ElabOptions {
            top: Some("callstack".into()),
            params: vec![("DEPTH".into(), depth as u64), ("SPW".into(), u64::from(spw))],
        },
    )
    .map_err(|e| AssumeError::Aux(e.to_string()))?;
    let prefix = "cs";
    let bindings = [
        ("push", ports.bit(&iface.is_call)?),
        ("push_addr", ports.word(&iface.call_return)?),
        ("pop", ports.bit(&iface.is_return)?),
        ("pop_target", ports.word(&iface.return_target)?),
    ];
    let merged = attach(netlist, &aux, prefix, &bindings).map_err(|e| AssumeError::Aux(e.to_string()))?;
    let ok = merged.lookup("cs.ok").expect("callstack has `ok`");
    let overflow = merged.lookup("cs.overflowed");
    let mut set = AssumptionSet::empty(Mode::Stack);
    set.extend_from(&jumps);
    set.push("call_stack", Expr::signal(ok, 1));
    set.aux = Some(AuxState {
        prefix: prefix.to_string(),
        netlist: merged,
        overflow,
    });
    Ok(set)
}

/// Assumptions for `mode`. The stack depth defaults to the program's call
/// depth.
pub fn generate(
    mode: Mode,
    netlist: &FlatNetlist,
    iface: &CoreInterface,
    program: Option<&ProgramImage>,
    stack_depth: Option<usize>,
) -> Result<AssumptionSet, AssumeError> {
    let prog = || program.ok_or(AssumeError::NoProgram(mode));
    match mode {
        Mode::None => Ok(AssumptionSet::empty(Mode::None)),
        Mode::Legal => gen_legal(netlist, iface),
        Mode::Used => gen_used(netlist, iface, prog()?),
        Mode::Jumps => gen_jump_constraints(netlist, iface, prog()?),
        Mode::Stack => {
            let p = prog()?;
            let depth = match stack_depth {
                Some(d) => d,
                None => p.call_depth().ok_or(AssumeError::Recursive)?.max(1),
            };
            gen_call_stack(netlist, iface, p, depth)
        }
    }
}

/// A generated assumption that a concrete run of the program breaks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub cycle: usize,
    pub property: String,
}

/// Runs `program` on the design for `cycles` cycles and checks every
/// constraint of `set` in every cycle.
///
/// The fetch port reads the image (zero between words); every other input
/// takes the value `inputs(cycle, signal)`.
pub fn validate_assumptions(
    base: &FlatNetlist,
    iface: &CoreInterface,
    program: &ProgramImage,
    set: &AssumptionSet,
    cycles: usize,
    mut inputs: impl FnMut(usize, SignalId) -> u64,
) -> Result<Result<(), Violation>, AssumeError> {
    let design = set.design(base);
    let ports = Ports { netlist: design };
    ports.word(&iface.fetch_data)?;
    ports.word(&iface.fetch_addr)?;
    let data = design.lookup(&iface.fetch_data).expect("checked");
    let addr = design.lookup(&iface.fetch_addr).expect("checked");
    let free: Vec<SignalId> = design
        .inputs()
        .map(|s| s.id)
        .filter(|&id| id != data && Some(id) != design.clock)
        .collect();
    let mut sim = Simulator::new(design);
    for cycle in 0..cycles {
        let driven: Vec<(SignalId, u64)> = free.iter().map(|&id| (id, inputs(cycle, id))).collect();
        sim.apply(&driven);
        // the fetch address may depend on the other inputs
        let pc = sim.value(addr) as u32;
        let word = program.words.get(&pc).copied().unwrap_or(0);
        sim.apply(&[(data, u64::from(word))]);
        if let Some(p) = set.violated(&sim) {
            return Ok(Err(Violation {
                cycle,
                property: p.name.clone(),
            }));
        }
        sim.tick();
    }
    Ok(Ok(()))
}
