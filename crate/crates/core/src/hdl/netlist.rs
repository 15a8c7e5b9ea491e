//! Flat, word-level netlist produced by elaboration.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::Span;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignalId(pub u32);

impl SignalId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Input,
    Output,
    Wire,
    Register,
    Memory,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignalDecl {
    pub id: SignalId,
    /// Instance-relative path, e.g. `u_alu.y`; top-level signals have no prefix.
    pub name: String,
    pub width: u32,
    pub kind: SignalKind,
    /// Word count; 1 for everything except memories.
    pub depth: u32,
    /// Top-level output port (also set for registered outputs).
    pub output: bool,
    pub signed: bool,
}

impl SignalDecl {
    pub fn is_state(&self) -> bool {
        matches!(self.kind, SignalKind::Register | SignalKind::Memory)
    }

    /// Bits needed to address every word of a memory.
    pub fn addr_width(&self) -> u32 {
        clog2(self.depth as u64).max(1)
    }
}

pub fn clog2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOp {
    Not,
    Neg,
    LogNot,
    RedAnd,
    RedOr,
    RedXor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BinaryOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Mul,
    Shl,
    Shr,
    Sar,
    Eq,
    Ne,
    Ult,
    Ule,
    Ugt,
    Uge,
    Slt,
    Sle,
    Sgt,
    Sge,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn is_comparison(self) -> bool {
        use BinaryOp::*;
        matches!(self, Eq | Ne | Ult | Ule | Ugt | Uge | Slt | Sle | Sgt | Sge)
    }

    pub fn is_signed_comparison(self) -> bool {
        matches!(self, BinaryOp::Slt | BinaryOp::Sle | BinaryOp::Sgt | BinaryOp::Sge)
    }

    /// Comparison with the opposite truth value.
    pub fn negated(self) -> Option<BinaryOp> {
        use BinaryOp::*;
        Some(match self {
            Eq => Ne,
            Ne => Eq,
            Ult => Uge,
            Uge => Ult,
            Ule => Ugt,
            Ugt => Ule,
            Slt => Sge,
            Sge => Slt,
            Sle => Sgt,
            Sgt => Sle,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            And => "&",
            Or => "|",
            Xor => "^",
            Add => "+",
            Sub => "-",
            Mul => "*",
            Shl => "<<",
            Shr => ">>",
            Sar => ">>>",
            Eq => "==",
            Ne => "!=",
            Ult | Slt => "<",
            Ule | Sle => "<=",
            Ugt | Sgt => ">",
            Uge | Sge => ">=",
            LogAnd => "&&",
            LogOr => "||",
        }
    }
}

/// Word-level expression; every node knows its result width.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Const(u64),
    Signal(SignalId),
    /// Constant part-select `signal[lsb + width - 1 : lsb]`.
    Slice(SignalId, u32),
    /// Bit select with a run-time index; out-of-range reads give 0.
    BitSel(SignalId, Box<Expr>),
    /// Memory word read; out-of-range addresses give 0.
    MemRead(SignalId, Box<Expr>),
    /// Auxiliary variable that keeps its initial value forever.
    Frozen(u32),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Mux(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Most significant part first.
    Concat(Vec<Expr>),
    /// Zero/sign extension or truncation to `width`.
    Resize(Box<Expr>, bool),
}

/// Values an expression may read.
pub trait ValueEnv {
    fn signal(&self, id: SignalId) -> u64;
    fn mem_word(&self, id: SignalId, addr: u64) -> u64;
    fn frozen(&self, index: u32) -> u64;
}

/// Environment for constant expressions.
struct NoEnv;

impl ValueEnv for NoEnv {
    fn signal(&self, _: SignalId) -> u64 {
        unreachable!("constant expression")
    }
    fn mem_word(&self, _: SignalId, _: u64) -> u64 {
        unreachable!("constant expression")
    }
    fn frozen(&self, _: u32) -> u64 {
        unreachable!("constant expression")
    }
}

fn sext(v: u64, width: u32) -> i64 {
    if width >= 64 {
        v as i64
    } else {
        let shift = 64 - width;
        ((v << shift) as i64) >> shift
    }
}

impl Expr {
    pub fn constant(value: u64, width: u32) -> Expr {
        Expr {
            kind: ExprKind::Const(value & mask(width)),
            width,
        }
    }

    pub fn bool_const(b: bool) -> Expr {
        Expr::constant(u64::from(b), 1)
    }

    pub fn signal(id: SignalId, width: u32) -> Expr {
        Expr {
            kind: ExprKind::Signal(id),
            width,
        }
    }

    pub fn frozen(index: u32, width: u32) -> Expr {
        Expr {
            kind: ExprKind::Frozen(index),
            width,
        }
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        let width = match op {
            UnaryOp::Not | UnaryOp::Neg => a.width,
            _ => 1,
        };
        let e = Expr {
            kind: ExprKind::Unary(op, Box::new(a)),
            width,
        };
        e.folded()
    }

    /// Evaluates nodes whose operands are all constants.
    fn folded(self) -> Expr {
        let consts = match &self.kind {
            ExprKind::Unary(_, a) => a.as_const().is_some(),
            ExprKind::Binary(_, a, b) => a.as_const().is_some() && b.as_const().is_some(),
            _ => false,
        };
        if consts {
            let v = self.eval(&NoEnv);
            return Expr::constant(v, self.width);
        }
        self
    }

    /// Builds a binary node; operands of width-preserving operators must
    /// already agree in width.
    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        use BinaryOp::*;
        let width = match op {
            And | Or | Xor | Add | Sub | Mul => {
                debug_assert_eq!(a.width, b.width, "{op:?}");
                a.width
            }
            Shl | Shr | Sar => a.width,
            _ => 1,
        };
        if op.is_comparison() {
            debug_assert_eq!(a.width, b.width, "{op:?}");
        }
        match op {
            LogAnd if a.is_false() || b.is_false() => return Expr::bool_const(false),
            LogOr if a.as_const().is_some_and(|v| v != 0) || b.as_const().is_some_and(|v| v != 0) => {
                return Expr::bool_const(true)
            }
            _ => {}
        }
        Expr {
            kind: ExprKind::Binary(op, Box::new(a), Box::new(b)),
            width,
        }
        .folded()
    }

    pub fn mux(c: Expr, a: Expr, b: Expr) -> Expr {
        debug_assert_eq!(a.width, b.width);
        if let Some(v) = c.as_const() {
            return if v != 0 { a } else { b };
        }
        let width = a.width;
        Expr {
            kind: ExprKind::Mux(Box::new(c), Box::new(a), Box::new(b)),
            width,
        }
    }

    pub fn resize(self, width: u32, signed: bool) -> Expr {
        if self.width == width {
            return self;
        }
        if let ExprKind::Const(v) = self.kind {
            let v = if signed {
                sext(v, self.width) as u64
            } else {
                v
            };
            return Expr::constant(v, width);
        }
        Expr {
            kind: ExprKind::Resize(Box::new(self), signed),
            width,
        }
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Eq, a, b)
    }

    pub fn as_const(&self) -> Option<u64> {
        match self.kind {
            ExprKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        self.width == 1 && self.as_const() == Some(1)
    }

    pub fn is_false(&self) -> bool {
        self.as_const() == Some(0)
    }

    /// True for nodes whose value is inherently Boolean.
    fn is_predicate(&self) -> bool {
        match &self.kind {
            ExprKind::Binary(op, _, _) => {
                op.is_comparison() || matches!(op, BinaryOp::LogAnd | BinaryOp::LogOr)
            }
            ExprKind::Unary(UnaryOp::LogNot, _) => true,
            ExprKind::Const(_) => self.width == 1,
            _ => false,
        }
    }

    /// Condition "this value is nonzero", written in readable form:
    /// `en == 1'b1` for one-bit values, `x != 0` otherwise.
    pub fn truthy(self) -> Expr {
        if let ExprKind::Unary(UnaryOp::LogNot, a) = self.kind {
            return a.falsy();
        }
        if self.is_predicate() {
            return self;
        }
        if let Some(v) = self.as_const() {
            return Expr::bool_const(v != 0);
        }
        let w = self.width;
        let op = if w == 1 { BinaryOp::Eq } else { BinaryOp::Ne };
        let rhs = if w == 1 { 1 } else { 0 };
        Expr::binary(op, self, Expr::constant(rhs, w))
    }

    /// Condition "this value is zero".
    pub fn falsy(self) -> Expr {
        match self.kind {
            ExprKind::Const(v) => Expr::bool_const(v == 0),
            ExprKind::Unary(UnaryOp::LogNot, a) => a.truthy(),
            // one-bit tests flip the constant: `en == 1'b1` becomes `en == 1'b0`
            ExprKind::Binary(op @ (BinaryOp::Eq | BinaryOp::Ne), a, b)
                if a.width == 1 && b.as_const().is_some() =>
            {
                let v = b.as_const().unwrap() ^ 1;
                Expr::binary(op, *a, Expr::constant(v, 1))
            }
            ExprKind::Binary(op, a, b) if op.negated().is_some() => {
                Expr::binary(op.negated().unwrap(), *a, *b)
            }
            ExprKind::Binary(op @ (BinaryOp::LogAnd | BinaryOp::LogOr), a, b) => {
                Expr::unary(UnaryOp::LogNot, Expr::binary(op, *a, *b))
            }
            kind => {
                let w = self.width;
                Expr::binary(BinaryOp::Eq, Expr { kind, width: w }, Expr::constant(0, w))
            }
        }
    }

    pub fn not(self) -> Expr {
        self.falsy()
    }

    pub fn and(self, other: Expr) -> Expr {
        if self.is_false() || other.is_true() {
            return self;
        }
        if self.is_true() || other.is_false() {
            return other;
        }
        if self == other {
            return self;
        }
        Expr::binary(BinaryOp::LogAnd, self, other)
    }

    pub fn or(self, other: Expr) -> Expr {
        if self.is_true() || other.is_false() {
            return self;
        }
        if self.is_false() || other.is_true() {
            return other;
        }
        if self == other {
            return self;
        }
        Expr::binary(BinaryOp::LogOr, self, other)
    }

    pub fn all(items: impl IntoIterator<Item = Expr>) -> Expr {
        items
            .into_iter()
            .fold(Expr::bool_const(true), |acc, e| acc.and(e))
    }

    pub fn any(items: impl IntoIterator<Item = Expr>) -> Expr {
        items
            .into_iter()
            .fold(Expr::bool_const(false), |acc, e| acc.or(e))
    }

    /// Every signal read by this expression.
    pub fn signals(&self) -> BTreeSet<SignalId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match &e.kind {
            ExprKind::Signal(s)
            | ExprKind::Slice(s, _)
            | ExprKind::BitSel(s, _)
            | ExprKind::MemRead(s, _) => {
                out.insert(*s);
            }
            _ => {}
        });
        out
    }

    pub fn frozen_vars(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let ExprKind::Frozen(i) = e.kind {
                out.insert(i);
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Signal(_) | ExprKind::Slice(..) | ExprKind::Frozen(_) => {}
            ExprKind::BitSel(_, a) | ExprKind::MemRead(_, a) => a.visit(f),
            ExprKind::Unary(_, a) | ExprKind::Resize(a, _) => a.visit(f),
            ExprKind::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ExprKind::Mux(c, a, b) => {
                c.visit(f);
                a.visit(f);
                b.visit(f);
            }
            ExprKind::Concat(items) => items.iter().for_each(|e| e.visit(f)),
        }
    }

    /// Renames every signal reference through `f`.
    pub fn map_signals(&self, f: &impl Fn(SignalId) -> SignalId) -> Expr {
        let kind = match &self.kind {
            ExprKind::Const(_) | ExprKind::Frozen(_) => return self.clone(),
            ExprKind::Signal(s) => ExprKind::Signal(f(*s)),
            ExprKind::Slice(s, l) => ExprKind::Slice(f(*s), *l),
            ExprKind::BitSel(s, a) => ExprKind::BitSel(f(*s), Box::new(a.map_signals(f))),
            ExprKind::MemRead(s, a) => ExprKind::MemRead(f(*s), Box::new(a.map_signals(f))),
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(a.map_signals(f))),
            ExprKind::Resize(a, s) => ExprKind::Resize(Box::new(a.map_signals(f)), *s),
            ExprKind::Binary(op, a, b) => {
                ExprKind::Binary(*op, Box::new(a.map_signals(f)), Box::new(b.map_signals(f)))
            }
            ExprKind::Mux(c, a, b) => ExprKind::Mux(
                Box::new(c.map_signals(f)),
                Box::new(a.map_signals(f)),
                Box::new(b.map_signals(f)),
            ),
            ExprKind::Concat(items) => ExprKind::Concat(items.iter().map(|e| e.map_signals(f)).collect()),
        };
        Expr {
            kind,
            width: self.width,
        }
    }

    /// Rewrites every `Frozen(i)` leaf through `f`.
    pub fn map_frozen(&self, f: &impl Fn(u32) -> Expr) -> Expr {
        let kind = match &self.kind {
            ExprKind::Frozen(i) => return f(*i),
            ExprKind::Const(_) | ExprKind::Signal(_) | ExprKind::Slice(..) => return self.clone(),
            ExprKind::BitSel(s, a) => ExprKind::BitSel(*s, Box::new(a.map_frozen(f))),
            ExprKind::MemRead(s, a) => ExprKind::MemRead(*s, Box::new(a.map_frozen(f))),
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(a.map_frozen(f))),
            ExprKind::Resize(a, s) => ExprKind::Resize(Box::new(a.map_frozen(f)), *s),
            ExprKind::Binary(op, a, b) => {
                ExprKind::Binary(*op, Box::new(a.map_frozen(f)), Box::new(b.map_frozen(f)))
            }
            ExprKind::Mux(c, a, b) => ExprKind::Mux(
                Box::new(c.map_frozen(f)),
                Box::new(a.map_frozen(f)),
                Box::new(b.map_frozen(f)),
            ),
            ExprKind::Concat(items) => {
                ExprKind::Concat(items.iter().map(|e| e.map_frozen(f)).collect())
            }
        };
        Expr {
            kind,
            width: self.width,
        }
    }

    /// Word-level evaluation; the result is masked to `self.width`.
    pub fn eval(&self, env: &impl ValueEnv) -> u64 {
        let m = mask(self.width);
        let v = match &self.kind {
            ExprKind::Const(v) => *v,
            ExprKind::Signal(s) => env.signal(*s),
            ExprKind::Slice(s, lsb) => env.signal(*s) >> lsb,
            ExprKind::BitSel(s, i) => {
                let i = i.eval(env);
                if i >= 64 {
                    0
                } else {
                    env.signal(*s) >> i
                }
            }
            ExprKind::MemRead(s, a) => env.mem_word(*s, a.eval(env)),
            ExprKind::Frozen(i) => env.frozen(*i),
            ExprKind::Unary(op, a) => {
                let x = a.eval(env);
                let am = mask(a.width);
                match op {
                    UnaryOp::Not => !x,
                    UnaryOp::Neg => x.wrapping_neg(),
                    UnaryOp::LogNot => u64::from(x == 0),
                    UnaryOp::RedAnd => u64::from(x == am),
                    UnaryOp::RedOr => u64::from(x != 0),
                    UnaryOp::RedXor => u64::from(x.count_ones() % 2 == 1),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let x = a.eval(env);
                let y = b.eval(env);
                let w = a.width;
                let (sx, sy) = (sext(x, w), sext(y, b.width));
                use BinaryOp::*;
                match op {
                    And => x & y,
                    Or => x | y,
                    Xor => x ^ y,
                    Add => x.wrapping_add(y),
                    Sub => x.wrapping_sub(y),
                    Mul => x.wrapping_mul(y),
                    Shl => {
                        if y >= u64::from(w) {
                            0
                        } else {
                            x << y
                        }
                    }
                    Shr => {
                        if y >= u64::from(w) {
                            0
                        } else {
                            x >> y
                        }
                    }
                    Sar => {
                        let s = sext(x, w);
                        (s >> y.min(63)) as u64
                    }
                    Eq => u64::from(x == y),
                    Ne => u64::from(x != y),
                    Ult => u64::from(x < y),
                    Ule => u64::from(x <= y),
                    Ugt => u64::from(x > y),
                    Uge => u64::from(x >= y),
                    Slt => u64::from(sx < sy),
                    Sle => u64::from(sx <= sy),
                    Sgt => u64::from(sx > sy),
                    Sge => u64::from(sx >= sy),
                    LogAnd => u64::from(x != 0 && y != 0),
                    LogOr => u64::from(x != 0 || y != 0),
                }
            }
            ExprKind::Mux(c, a, b) => {
                if c.eval(env) != 0 {
                    a.eval(env)
                } else {
                    b.eval(env)
                }
            }
            ExprKind::Concat(items) => {
                let mut acc = 0u64;
                for e in items {
                    acc = if e.width >= 64 { 0 } else { acc << e.width };
                    acc |= e.eval(env);
                }
                acc
            }
            ExprKind::Resize(a, signed) => {
                let x = a.eval(env);
                if *signed {
                    sext(x, a.width) as u64
                } else {
                    x
                }
            }
        };
        v & m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    Combinational,
    Clocked,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    /// `signal[lsb + width - 1 : lsb]`
    Bits {
        signal: SignalId,
        lsb: u32,
        width: u32,
    },
    /// One word of a memory, selected by `addr`.
    Word { memory: SignalId, addr: Expr },
}

impl Target {
    pub fn signal(&self) -> SignalId {
        match self {
            Target::Bits { signal, .. } => *signal,
            Target::Word { memory, .. } => *memory,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub id: usize,
    pub target: Target,
    pub source: Expr,
    /// Effective firing condition; the constant true for unconditional ones.
    pub condition: Expr,
    pub timing: Timing,
    /// Position in source-text order across the whole elaborated design.
    pub order: usize,
    pub span: Span,
}

impl Assignment {
    pub fn is_unconditional(&self) -> bool {
        self.condition.is_true()
    }

    pub fn target_width(&self, netlist: &FlatNetlist) -> u32 {
        match &self.target {
            Target::Bits { width, .. } => *width,
            Target::Word { memory, .. } => netlist.signal(*memory).width,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Reset {
    pub signal: SignalId,
    pub active_high: bool,
}

#[derive(Clone, Debug)]
pub struct FlatNetlist {
    pub top: String,
    pub signals: Vec<SignalDecl>,
    pub assignments: Vec<Assignment>,
    pub clock: Option<SignalId>,
    pub reset: Option<Reset>,
    /// Conditions of sibling branches (if/else, case arms) after flattening.
    pub branch_pairs: Vec<(Expr, Expr)>,
    pub(crate) by_name: HashMap<String, SignalId>,
    pub(crate) drivers: Vec<Vec<usize>>,
    /// Combinational signals in dependency order.
    pub(crate) comb_order: Vec<SignalId>,
}

impl FlatNetlist {
    pub fn signal(&self, id: SignalId) -> &SignalDecl {
        &self.signals[id.index()]
    }

    pub fn lookup(&self, name: &str) -> Option<SignalId> {
        self.by_name.get(name).copied().or_else(|| {
            let rest = name.strip_prefix(&self.top)?.strip_prefix('.')?;
            self.by_name.get(rest).copied()
        })
    }

    pub fn name(&self, id: SignalId) -> &str {
        &self.signal(id).name
    }

    /// `top.u1.x` style name.
    pub fn hierarchical_name(&self, id: SignalId) -> String {
        format!("{}.{}", self.top, self.signal(id).name)
    }

    /// Assignments that write `id`, in source order.
    pub fn drivers(&self, id: SignalId) -> impl Iterator<Item = &Assignment> {
        self.drivers[id.index()].iter().map(|&i| &self.assignments[i])
    }

    pub fn comb_order(&self) -> &[SignalId] {
        &self.comb_order
    }

    pub fn inputs(&self) -> impl Iterator<Item = &SignalDecl> {
        self.signals.iter().filter(|s| s.kind == SignalKind::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &SignalDecl> {
        self.signals.iter().filter(|s| s.output)
    }

    pub fn state_signals(&self) -> impl Iterator<Item = &SignalDecl> {
        self.signals.iter().filter(|s| s.is_state())
    }

    /// Register plus memory bits.
    pub fn state_bits(&self) -> u64 {
        self.state_signals()
            .map(|s| u64::from(s.width) * u64::from(s.depth))
            .sum()
    }

    /// Inputs other than the clock, i.e. the values a testbench drives.
    pub fn free_inputs(&self) -> Vec<SignalId> {
        self.inputs()
            .filter(|s| Some(s.id) != self.clock)
            .map(|s| s.id)
            .collect()
    }
}
