//! Canonical source rendering of a [`ModuleTree`].
//!
//! Binary and ternary expressions are fully parenthesized, so reparsing the
//! output yields a structurally identical tree.

use std::fmt::Write as _;

use super::ast::*;

pub fn pretty_print(tree: &ModuleTree) -> String {
    let mut out = String::new();
    for (i, m) in tree.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        module(&mut out, m);
    }
    out
}

fn module(out: &mut String, m: &Module) {
    write!(out, "module {}", m.name).unwrap();
    if !m.params.is_empty() {
        out.push_str(" #(\n");
        for (i, p) in m.params.iter().enumerate() {
            let sep = if i + 1 < m.params.len() { "," } else { "" };
            writeln!(out, "    parameter {} = {}{sep}", p.name, expr(&p.value)).unwrap();
        }
        out.push(')');
    }
    out.push_str(" (\n");
    for (i, p) in m.ports.iter().enumerate() {
        let dir = match p.dir {
            Direction::Input => "input",
            Direction::Output => "output",
        };
        let reg = if p.is_reg { " reg" } else { "" };
        let signed = if p.signed { " signed" } else { "" };
        let sep = if i + 1 < m.ports.len() { "," } else { "" };
        writeln!(out, "    {dir}{reg}{signed}{} {}{sep}", range(&p.range), p.name).unwrap();
    }
    out.push_str(");\n");
    for item in &m.items {
        match item {
            Item::Net(n) => {
                let kind = match n.kind {
                    NetKind::Wire => "wire",
                    NetKind::Reg => "reg",
                };
                let signed = if n.signed { " signed" } else { "" };
                let names: Vec<String> = n
                    .names
                    .iter()
                    .map(|nn| {
                        let mut s = nn.name.clone();
                        if let Some(a) = &nn.array {
                            write!(s, " [{}:{}]", expr(&a.msb), expr(&a.lsb)).unwrap();
                        }
                        if let Some(init) = &nn.init {
                            write!(s, " = {}", expr(init)).unwrap();
                        }
                        s
                    })
                    .collect();
                writeln!(out, "  {kind}{signed}{} {};", range(&n.range), names.join(", ")).unwrap();
            }
            Item::Param(p) => {
                let kw = if p.local { "localparam" } else { "parameter" };
                writeln!(out, "  {kw} {} = {};", p.name, expr(&p.value)).unwrap();
            }
            Item::Assign(a) => {
                writeln!(out, "  assign {} = {};", lvalue(&a.lhs), expr(&a.rhs)).unwrap();
            }
            Item::Always(a) => {
                match &a.sens {
                    Sensitivity::Posedge(c) => write!(out, "  always @(posedge {c}) ").unwrap(),
                    Sensitivity::Star => out.push_str("  always @* "),
                }
                stmt(out, &a.body, 1);
            }
            Item::Instance(inst) => {
                write!(out, "  {}", inst.module).unwrap();
                if !inst.params.is_empty() {
                    let ps: Vec<String> = inst
                        .params
                        .iter()
                        .map(|(n, v)| format!(".{n}({})", expr(v)))
                        .collect();
                    write!(out, " #({})", ps.join(", ")).unwrap();
                }
                writeln!(out, " {} (", inst.name).unwrap();
                for (i, c) in inst.conns.iter().enumerate() {
                    let sep = if i + 1 < inst.conns.len() { "," } else { "" };
                    let e = c.expr.as_ref().map(expr).unwrap_or_default();
                    writeln!(out, "    .{}({e}){sep}", c.port).unwrap();
                }
                out.push_str("  );\n");
            }
        }
    }
    out.push_str("endmodule\n");
}

fn range(r: &Option<Range>) -> String {
    match r {
        Some(r) => format!(" [{}:{}]", expr(&r.msb), expr(&r.lsb)),
        None => String::new(),
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Writes `s` starting at the current position and ends with a newline.
fn stmt(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Empty(_) => out.push_str(";\n"),
        Stmt::Block(body, _) => {
            out.push_str("begin\n");
            for b in body {
                indent(out, level + 1);
                stmt(out, b, level + 1);
            }
            indent(out, level);
            out.push_str("end\n");
        }
        Stmt::If {
            cond, then, els, ..
        } => {
            write!(out, "if ({}) ", expr(cond)).unwrap();
            // a nested if without else would capture our else
            let wrap = els.is_some() && dangling(then);
            if wrap {
                out.push_str("begin\n");
                indent(out, level + 1);
                stmt(out, then, level + 1);
                indent(out, level);
                out.push_str("end\n");
            } else {
                stmt(out, then, level);
            }
            if let Some(e) = els {
                indent(out, level);
                out.push_str("else ");
                stmt(out, e, level);
            }
        }
        Stmt::Case {
            subject,
            arms,
            default,
            ..
        } => {
            writeln!(out, "case ({})", expr(subject)).unwrap();
            for arm in arms {
                indent(out, level + 1);
                let labels: Vec<String> = arm.labels.iter().map(expr).collect();
                write!(out, "{}: ", labels.join(", ")).unwrap();
                stmt(out, &arm.body, level + 1);
            }
            if let Some(d) = default {
                indent(out, level + 1);
                out.push_str("default: ");
                stmt(out, d, level + 1);
            }
            indent(out, level);
            out.push_str("endcase\n");
        }
        Stmt::Assign {
            lhs,
            rhs,
            nonblocking,
            ..
        } => {
            let op = if *nonblocking { "<=" } else { "=" };
            writeln!(out, "{} {op} {};", lvalue(lhs), expr(rhs)).unwrap();
        }
    }
}

/// Ends in an `if` without `else`.
fn dangling(s: &Stmt) -> bool {
    match s {
        Stmt::If { els: None, .. } => true,
        Stmt::If { els: Some(e), .. } => dangling(e),
        _ => false,
    }
}

fn lvalue(l: &LValue) -> String {
    match &l.select {
        None => l.name.clone(),
        Some(Select::Index(i)) => format!("{}[{}]", l.name, expr(i)),
        Some(Select::Part(a, b)) => format!("{}[{}:{}]", l.name, expr(a), expr(b)),
    }
}

pub fn number(width: Option<u32>, signed: bool, base: Base, value: u64) -> String {
    let s = if signed { "s" } else { "" };
    let (b, digits) = match base {
        Base::Bin => ('b', format!("{value:b}")),
        Base::Oct => ('o', format!("{value:o}")),
        Base::Dec => ('d', format!("{value}")),
        Base::Hex => ('h', format!("{value:x}")),
    };
    match width {
        None if base == Base::Dec && !signed => digits,
        None => format!("'{s}{b}{digits}"),
        Some(w) => format!("{w}'{s}{b}{digits}"),
    }
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Number {
            width,
            signed,
            base,
            value,
        } => number(*width, *signed, *base, *value),
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Index(n, i) => format!("{n}[{}]", expr(i)),
        ExprKind::Part(n, a, b) => format!("{n}[{}:{}]", expr(a), expr(b)),
        ExprKind::Concat(items) => {
            let parts: Vec<String> = items.iter().map(expr).collect();
            format!("{{{}}}", parts.join(", "))
        }
        ExprKind::Repeat(n, items) => {
            let parts: Vec<String> = items.iter().map(expr).collect();
            format!("{{{}{{{}}}}}", expr(n), parts.join(", "))
        }
        ExprKind::Unary(op, a) => {
            let inner = expr(a);
            if matches!(a.kind, ExprKind::Unary(..)) {
                format!("{}({inner})", op.symbol())
            } else {
                format!("{}{inner}", op.symbol())
            }
        }
        ExprKind::Binary(op, a, b) => format!("({} {} {})", expr(a), op.symbol(), expr(b)),
        ExprKind::Ternary(c, a, b) => format!("({} ? {} : {})", expr(c), expr(a), expr(b)),
        ExprKind::Signed(a) => format!("$signed({})", expr(a)),
    }
}
