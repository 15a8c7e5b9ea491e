//! Syntax-tree expressions to sized netlist expressions.
//!
//! Widths follow the usual context rules: arithmetic, bitwise and ternary
//! operands are extended to the width of the enclosing expression, while
//! comparison operands are sized against each other and concatenation items,
//! shift amounts and reduction operands are self-determined.

use super::ast::{self, ExprKind as A, Span};
use super::error::HdlError;
use super::netlist::{BinaryOp, Expr, ExprKind, SignalId, UnaryOp, ValueEnv};

/// What a name in an expression refers to.
#[derive(Clone, Copy, Debug)]
pub enum Resolved {
    Signal {
        id: SignalId,
        width: u32,
        signed: bool,
        memory: bool,
    },
    Param {
        value: u64,
        width: u32,
    },
    Frozen {
        index: u32,
        width: u32,
    },
}

pub trait Names {
    fn resolve(&self, name: &str, span: Span) -> Result<Resolved, HdlError>;
}

pub struct Lowerer<'a, N: Names + ?Sized> {
    pub names: &'a N,
}

impl<'a, N: Names + ?Sized> Lowerer<'a, N> {
    pub fn new(names: &'a N) -> Self {
        Lowerer { names }
    }

    fn signal(&self, name: &str, span: Span) -> Result<(SignalId, u32, bool, bool), HdlError> {
        match self.names.resolve(name, span)? {
            Resolved::Signal {
                id,
                width,
                signed,
                memory,
            } => Ok((id, width, signed, memory)),
            _ => Err(HdlError::elab(span, format!("`{name}` is not a signal"))),
        }
    }

    pub fn const_eval(&self, e: &ast::Expr) -> Result<u64, HdlError> {
        let lowered = self.lower_self(e)?;
        if !lowered.signals().is_empty() || !lowered.frozen_vars().is_empty() {
            return Err(HdlError::elab(e.span, "expression is not constant"));
        }
        Ok(lowered.eval(&NoValues))
    }

    /// Self-determined width and signedness.
    pub fn self_type(&self, e: &ast::Expr) -> Result<(u32, bool), HdlError> {
        let t = match &e.kind {
            A::Number { width, signed, .. } => (width.unwrap_or(32), *signed),
            A::Ident(n) => match self.names.resolve(n, e.span)? {
                Resolved::Param { width, .. } => (width, false),
                Resolved::Frozen { width, .. } => (width, false),
                Resolved::Signal {
                    width,
                    signed,
                    memory,
                    ..
                } => {
                    if memory {
                        return Err(HdlError::unsupported(e.span, "whole-memory reference"));
                    }
                    (width, signed)
                }
            },
            A::Index(n, _) => {
                let (_, width, _, memory) = self.signal(n, e.span)?;
                (if memory { width } else { 1 }, false)
            }
            A::Part(_, a, b) => {
                let msb = self.const_eval(a)?;
                let lsb = self.const_eval(b)?;
                if msb < lsb {
                    return Err(HdlError::unsupported(e.span, "descending part-select"));
                }
                ((msb - lsb + 1).min(1 << 20) as u32, false)
            }
            A::Concat(items) => {
                let mut w = 0u32;
                for i in items {
                    w = w.saturating_add(self.self_type(i)?.0);
                }
                (w, false)
            }
            A::Repeat(n, items) => {
                let count = self.const_eval(n)?;
                let mut w = 0u64;
                for i in items {
                    w += u64::from(self.self_type(i)?.0);
                }
                ((w * count).min(1 << 20) as u32, false)
            }
            A::Unary(op, a) => match op {
                ast::UnaryOp::Not | ast::UnaryOp::Neg | ast::UnaryOp::Plus => self.self_type(a)?,
                _ => (1, false),
            },
            A::Binary(op, a, b) => {
                use ast::BinaryOp::*;
                match op {
                    Mul | Add | Sub | And | Or | Xor | Xnor => {
                        let (wa, sa) = self.self_type(a)?;
                        let (wb, sb) = self.self_type(b)?;
                        (wa.max(wb), sa && sb)
                    }
                    Shl | Shr | AShl | AShr => self.self_type(a)?,
                    _ => (1, false),
                }
            }
            A::Ternary(_, a, b) => {
                let (wa, sa) = self.self_type(a)?;
                let (wb, sb) = self.self_type(b)?;
                (wa.max(wb), sa && sb)
            }
            A::Signed(a) => (self.self_type(a)?.0, true),
        };
        if t.0 > 64 || t.0 == 0 {
            return Err(HdlError::unsupported(e.span, format!("expression of width {}", t.0)));
        }
        Ok(t)
    }

    pub fn lower_self(&self, e: &ast::Expr) -> Result<Expr, HdlError> {
        let (w, s) = self.self_type(e)?;
        self.lower(e, w, s)
    }

    /// A Boolean condition in readable normal form.
    pub fn lower_condition(&self, e: &ast::Expr) -> Result<Expr, HdlError> {
        Ok(self.lower_self(e)?.truthy())
    }

    /// Right-hand side sized for a target of `width` bits.
    pub fn lower_assign(&self, e: &ast::Expr, width: u32) -> Result<Expr, HdlError> {
        let (sw, signed) = self.self_type(e)?;
        let w = sw.max(width);
        Ok(self.lower(e, w, signed)?.resize(width, signed))
    }

    /// Lowers `e` in a context of `width` bits (never below its own width).
    pub fn lower(&self, e: &ast::Expr, width: u32, signed: bool) -> Result<Expr, HdlError> {
        let (own, own_signed) = self.self_type(e)?;
        let width = width.max(own);
        let ext = |x: Expr| x.resize(width, signed && own_signed);
        Ok(match &e.kind {
            A::Number { value, .. } => ext(Expr::constant(*value, own)),
            A::Ident(n) => match self.names.resolve(n, e.span)? {
                Resolved::Param { value, width: w } => ext(Expr::constant(value, w)),
                Resolved::Frozen { index, width: w } => ext(Expr::frozen(index, w)),
                Resolved::Signal { id, .. } => ext(Expr::signal(id, own)),
            },
            A::Index(n, i) => {
                let (id, sw, _, memory) = self.signal(n, e.span)?;
                let idx = self.lower_self(i)?;
                let node = if memory {
                    Expr {
                        kind: ExprKind::MemRead(id, Box::new(idx)),
                        width: sw,
                    }
                } else if let (Some(b), true) = (idx.as_const(), idx.signals().is_empty()) {
                    if b >= u64::from(sw) {
                        return Err(HdlError::elab(e.span, format!("bit {b} out of range for `{n}`")));
                    }
                    slice(id, sw, b as u32, 1)
                } else {
                    Expr {
                        kind: ExprKind::BitSel(id, Box::new(idx)),
                        width: 1,
                    }
                };
                node.resize(width, false)
            }
            A::Part(n, a, b) => {
                let (id, sw, _, memory) = self.signal(n, e.span)?;
                if memory {
                    return Err(HdlError::unsupported(e.span, "part-select of a memory"));
                }
                let msb = self.const_eval(a)?;
                let lsb = self.const_eval(b)?;
                if msb >= u64::from(sw) {
                    return Err(HdlError::elab(
                        e.span,
                        format!("part-select [{msb}:{lsb}] out of range for `{n}`"),
                    ));
                }
                slice(id, sw, lsb as u32, (msb - lsb + 1) as u32).resize(width, false)
            }
            A::Concat(items) => {
                let parts = items
                    .iter()
                    .map(|i| self.lower_self(i))
                    .collect::<Result<Vec<_>, _>>()?;
                concat(parts).resize(width, false)
            }
            A::Repeat(n, items) => {
                let count = self.const_eval(n)?;
                if count == 0 {
                    return Err(HdlError::unsupported(e.span, "zero replication"));
                }
                let parts = items
                    .iter()
                    .map(|i| self.lower_self(i))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut all = Vec::new();
                for _ in 0..count {
                    all.extend(parts.iter().cloned());
                }
                concat(all).resize(width, false)
            }
            A::Unary(op, a) => match op {
                ast::UnaryOp::Plus => self.lower(a, width, signed)?,
                ast::UnaryOp::Not => Expr::unary(UnaryOp::Not, self.lower(a, width, signed)?),
                ast::UnaryOp::Neg => Expr::unary(UnaryOp::Neg, self.lower(a, width, signed)?),
                _ => {
                    let inner = self.lower_self(a)?;
                    let r = match op {
                        ast::UnaryOp::LogNot => Expr::unary(UnaryOp::LogNot, inner),
                        ast::UnaryOp::RedAnd => Expr::unary(UnaryOp::RedAnd, inner),
                        ast::UnaryOp::RedOr => Expr::unary(UnaryOp::RedOr, inner),
                        ast::UnaryOp::RedXor => Expr::unary(UnaryOp::RedXor, inner),
                        ast::UnaryOp::RedNand => {
                            Expr::unary(UnaryOp::Not, Expr::unary(UnaryOp::RedAnd, inner))
                        }
                        ast::UnaryOp::RedNor => {
                            Expr::unary(UnaryOp::Not, Expr::unary(UnaryOp::RedOr, inner))
                        }
                        ast::UnaryOp::RedXnor => {
                            Expr::unary(UnaryOp::Not, Expr::unary(UnaryOp::RedXor, inner))
                        }
                        ast::UnaryOp::Not | ast::UnaryOp::Neg | ast::UnaryOp::Plus => unreachable!(),
                    };
                    r.resize(width, false)
                }
            },
            A::Binary(op, a, b) => {
                use ast::BinaryOp as B;
                let ctx_signed = signed && own_signed;
                match op {
                    B::Mul | B::Add | B::Sub | B::And | B::Or | B::Xor | B::Xnor => {
                        let x = self.lower(a, width, ctx_signed)?;
                        let y = self.lower(b, width, ctx_signed)?;
                        let kind = match op {
                            B::Mul => BinaryOp::Mul,
                            B::Add => BinaryOp::Add,
                            B::Sub => BinaryOp::Sub,
                            B::And => BinaryOp::And,
                            B::Or => BinaryOp::Or,
                            _ => BinaryOp::Xor,
                        };
                        let r = Expr::binary(kind, x, y);
                        if *op == B::Xnor {
                            Expr::unary(UnaryOp::Not, r)
                        } else {
                            r
                        }
                    }
                    B::Shl | B::Shr | B::AShl | B::AShr => {
                        let x = self.lower(a, width, ctx_signed)?;
                        let y = self.lower_self(b)?;
                        let kind = match op {
                            B::Shl | B::AShl => BinaryOp::Shl,
                            B::AShr if ctx_signed => BinaryOp::Sar,
                            _ => BinaryOp::Shr,
                        };
                        Expr::binary(kind, x, y)
                    }
                    B::Lt | B::Le | B::Gt | B::Ge | B::Eq | B::Ne => {
                        let (wa, sa) = self.self_type(a)?;
                        let (wb, sb) = self.self_type(b)?;
                        let cw = wa.max(wb);
                        let cs = sa && sb;
                        let x = self.lower(a, cw, cs)?;
                        let y = self.lower(b, cw, cs)?;
                        let kind = match (op, cs) {
                            (B::Eq, _) => BinaryOp::Eq,
                            (B::Ne, _) => BinaryOp::Ne,
                            (B::Lt, false) => BinaryOp::Ult,
                            (B::Le, false) => BinaryOp::Ule,
                            (B::Gt, false) => BinaryOp::Ugt,
                            (B::Ge, false) => BinaryOp::Uge,
                            (B::Lt, true) => BinaryOp::Slt,
                            (B::Le, true) => BinaryOp::Sle,
                            (B::Gt, true) => BinaryOp::Sgt,
                            (_, true) => BinaryOp::Sge,
                            _ => unreachable!(),
                        };
                        Expr::binary(kind, x, y).resize(width, false)
                    }
                    B::LogAnd | B::LogOr => {
                        let x = self.lower_self(a)?.truthy();
                        let y = self.lower_self(b)?.truthy();
                        let kind = if *op == B::LogAnd {
                            BinaryOp::LogAnd
                        } else {
                            BinaryOp::LogOr
                        };
                        Expr::binary(kind, x, y).resize(width, false)
                    }
                }
            }
            A::Ternary(c, a, b) => {
                let cond = self.lower_self(c)?.truthy();
                let ctx_signed = signed && own_signed;
                let x = self.lower(a, width, ctx_signed)?;
                let y = self.lower(b, width, ctx_signed)?;
                Expr::mux(cond, x, y)
            }
            A::Signed(a) => self.lower_self(a)?.resize(width, signed),
        })
    }
}

pub(crate) fn slice(id: SignalId, signal_width: u32, lsb: u32, width: u32) -> Expr {
    if lsb == 0 && width == signal_width {
        Expr::signal(id, width)
    } else {
        Expr {
            kind: ExprKind::Slice(id, lsb),
            width,
        }
    }
}

pub(crate) fn concat(parts: Vec<Expr>) -> Expr {
    if parts.len() == 1 {
        return parts.into_iter().next().unwrap();
    }
    let width = parts.iter().map(|p| p.width).sum();
    Expr {
        kind: ExprKind::Concat(parts),
        width,
    }
}

pub(crate) struct NoValues;

impl ValueEnv for NoValues {
    fn signal(&self, _: SignalId) -> u64 {
        0
    }
    fn mem_word(&self, _: SignalId, _: u64) -> u64 {
        0
    }
    fn frozen(&self, _: u32) -> u64 {
        0
    }
}
