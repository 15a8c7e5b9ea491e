//! Netlist expressions back to Verilog expression text.
//!
//! The output re-lowers to the same expression for everything the condition
//! builders produce: extensions are left implicit (the context re-creates
//! them) and signed operands are wrapped in `$signed(...)`.

use super::netlist::{BinaryOp, Expr, ExprKind, FlatNetlist, SignalId, UnaryOp};

pub fn render_with(e: &Expr, name: &dyn Fn(SignalId) -> String, frozen: &dyn Fn(u32) -> String) -> String {
    let r = |x: &Expr| render_with(x, name, frozen);
    match &e.kind {
        ExprKind::Const(v) => constant(*v, e.width),
        ExprKind::Signal(s) => name(*s),
        ExprKind::Slice(s, lsb) => {
            if e.width == 1 {
                format!("{}[{lsb}]", name(*s))
            } else {
                format!("{}[{}:{lsb}]", name(*s), lsb + e.width - 1)
            }
        }
        ExprKind::BitSel(s, i) | ExprKind::MemRead(s, i) => format!("{}[{}]", name(*s), r(i)),
        ExprKind::Frozen(i) => frozen(*i),
        ExprKind::Unary(op, a) => {
            let sym = match op {
                UnaryOp::Not => "~",
                UnaryOp::Neg => "-",
                UnaryOp::LogNot => "!",
                UnaryOp::RedAnd => "&",
                UnaryOp::RedOr => "|",
                UnaryOp::RedXor => "^",
            };
            if matches!(a.kind, ExprKind::Unary(..)) {
                format!("{sym}({})", r(a))
            } else {
                format!("{sym}{}", r(a))
            }
        }
        ExprKind::Binary(op, a, b) => {
            let signed = op.is_signed_comparison() || *op == BinaryOp::Sar;
            let lhs = if signed { signed_operand(a, &r) } else { r(a) };
            let rhs = if op.is_signed_comparison() {
                signed_operand(b, &r)
            } else {
                r(b)
            };
            format!("({lhs} {} {rhs})", op.symbol())
        }
        ExprKind::Mux(c, a, b) => format!("({} ? {} : {})", r(c), r(a), r(b)),
        ExprKind::Concat(items) => {
            let parts: Vec<String> = items.iter().map(r).collect();
            format!("{{{}}}", parts.join(", "))
        }
        ExprKind::Resize(a, true) => format!("$signed({})", r(a)),
        ExprKind::Resize(a, false) => r(a),
    }
}

fn signed_operand(e: &Expr, r: &dyn Fn(&Expr) -> String) -> String {
    match &e.kind {
        ExprKind::Resize(inner, true) => format!("$signed({})", r(inner)),
        _ => format!("$signed({})", r(e)),
    }
}

fn constant(v: u64, width: u32) -> String {
    if width == 1 {
        format!("1'b{v}")
    } else if v < 1024 {
        format!("{width}'d{v}")
    } else {
        format!("{width}'h{v:x}")
    }
}

impl FlatNetlist {
    /// Renders with netlist signal names; frozen variables print as `f<i>`.
    pub fn render(&self, e: &Expr) -> String {
        render_with(e, &|s| self.name(s).to_string(), &|i| format!("f{i}"))
    }
}
