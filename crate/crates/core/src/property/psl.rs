//! PSL text for [`Property`] values.
//!
//! ```text
//! default clock = (posedge clk);
//! // origin: path P3
//! cover_P3: forall f0 in {0:15} : cover { (a == 1'b1) ; (b == 1'b0)[*] ; (c != 8'd0) : (d == 1'b1) };
//! ```
//!
//! `[*]` binds tighter than `:`, which binds tighter than `;`; both binary
//! operators associate to the left and braces group. Atoms are Verilog
//! expressions over netlist signal names and frozen variables `f<i>`; each
//! `forall` binds one frozen variable to a value range.

use thiserror::Error;

use crate::hdl::lower::{Lowerer, Names, Resolved};
use crate::hdl::netlist::clog2;
use crate::hdl::{FlatNetlist, HdlError, Parser, SignalKind, Span, Tok};

use super::seq::{BoolCond, CondKind, FrozenVar, Origin, PropKind, Property, TemporalSeq};

#[derive(Debug, Error)]
pub enum PslError {
    #[error("{0}")]
    Syntax(#[from] HdlError),
    #[error("expected exactly one property, found {0}")]
    Count(usize),
}

fn precedence(s: &TemporalSeq) -> u8 {
    match s {
        TemporalSeq::Concat(..) => 1,
        TemporalSeq::Fuse(..) => 2,
        TemporalSeq::RepInf(_) => 3,
        TemporalSeq::Atom(_) => 4,
    }
}

fn atom_text(netlist: &FlatNetlist, c: &BoolCond) -> String {
    let t = netlist.render(&c.expr);
    if t.starts_with('(') && balanced_outer(&t) {
        t
    } else {
        format!("({t})")
    }
}

/// Whether the first `(` closes at the very end.
fn balanced_outer(t: &str) -> bool {
    let mut depth = 0i32;
    for (i, ch) in t.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 && i + 1 != t.len() {
                    return false;
                }
            }
            _ => {}
        }
    }
    true
}

fn seq_text(netlist: &FlatNetlist, s: &TemporalSeq, min: u8) -> String {
    let text = match s {
        TemporalSeq::Atom(c) => atom_text(netlist, c),
        TemporalSeq::Concat(a, b) => {
            format!("{} ; {}", seq_text(netlist, a, 1), seq_text(netlist, b, 2))
        }
        TemporalSeq::Fuse(a, b) => {
            format!("{} : {}", seq_text(netlist, a, 2), seq_text(netlist, b, 3))
        }
        TemporalSeq::RepInf(a) => format!("{}[*]", seq_text(netlist, a, 4)),
    };
    if precedence(s) < min {
        format!("{{{text}}}")
    } else {
        text
    }
}

/// The sequence alone, without a directive.
pub fn emit_seq(netlist: &FlatNetlist, s: &TemporalSeq) -> String {
    seq_text(netlist, s, 1)
}

/// One directive, preceded by an origin comment.
pub fn emit_psl(netlist: &FlatNetlist, prop: &Property) -> String {
    let origin = match &prop.origin {
        Origin::Path(p) => format!("path {p}"),
        Origin::Mode(m) => format!("mode {m}"),
    };
    let mut out = format!("// origin: {origin}\n{}: ", prop.name);
    for f in &prop.frozen {
        out.push_str(&format!("forall {} in {{0:{}}} : ", f.name(), f.max));
    }
    let kw = match prop.kind {
        PropKind::Cover => "cover",
        PropKind::Assume => "assume",
    };
    out.push_str(&format!("{kw} {{ {} }};\n", emit_seq(netlist, &prop.body)));
    out
}

/// A whole file: the default clock followed by every directive.
pub fn emit_file(netlist: &FlatNetlist, props: &[Property]) -> String {
    let clock = netlist
        .clock
        .map(|c| netlist.name(c).to_string())
        .unwrap_or_else(|| "clk".to_string());
    let mut out = format!("default clock = (posedge {clock});\n\n");
    for p in props {
        out.push_str(&emit_psl(netlist, p));
    }
    out
}

struct PropNames<'a> {
    netlist: &'a FlatNetlist,
    frozen: &'a [FrozenVar],
}

impl Names for PropNames<'_> {
    fn resolve(&self, name: &str, span: Span) -> Result<Resolved, HdlError> {
        if let Some(id) = self.netlist.lookup(name) {
            let s = self.netlist.signal(id);
            return Ok(Resolved::Signal {
                id,
                width: s.width,
                signed: s.signed,
                memory: s.kind == SignalKind::Memory,
            });
        }
        if let Some(f) = self.frozen.iter().find(|f| f.name() == name) {
            return Ok(Resolved::Frozen {
                index: f.index,
                width: f.width,
            });
        }
        Err(HdlError::elab(span, format!("unknown signal `{name}`")))
    }
}

struct PslParser<'a> {
    p: Parser,
    netlist: &'a FlatNetlist,
    frozen: Vec<FrozenVar>,
}

impl PslParser<'_> {
    fn number(&mut self) -> Result<u64, HdlError> {
        match self.p.peek().clone() {
            Tok::Number { value, .. } => {
                self.p.advance();
                Ok(value)
            }
            _ => self.p.error(&["number"]),
        }
    }

    fn kw(&mut self, s: &str) -> Result<(), HdlError> {
        if self.p.is_kw(s) {
            self.p.advance();
            Ok(())
        } else {
            self.p.error(&[&format!("`{s}`")])
        }
    }

    fn seq(&mut self) -> Result<TemporalSeq, HdlError> {
        let mut s = self.fuse()?;
        while self.p.eat_sym(";") {
            s = TemporalSeq::concat(s, self.fuse()?);
        }
        Ok(s)
    }

    fn fuse(&mut self) -> Result<TemporalSeq, HdlError> {
        let mut s = self.rep()?;
        while self.p.eat_sym(":") {
            s = TemporalSeq::fuse(s, self.rep()?);
        }
        Ok(s)
    }

    fn rep(&mut self) -> Result<TemporalSeq, HdlError> {
        let mut s = self.primary()?;
        while self.p.eat_sym("[*]") {
            s = TemporalSeq::rep(s);
        }
        Ok(s)
    }

    fn primary(&mut self) -> Result<TemporalSeq, HdlError> {
        if self.p.eat_sym("{") {
            let s = self.seq()?;
            self.p.expect_sym("}")?;
            return Ok(s);
        }
        if self.p.is_sym(";") || self.p.is_sym(":") || self.p.is_sym("}") || self.p.at_eof() {
            return self.p.error(&["`(`", "`{`", "expression"]);
        }
        let e = self.p.expr()?;
        let names = PropNames {
            netlist: self.netlist,
            frozen: &self.frozen,
        };
        let cond = Lowerer::new(&names).lower_condition(&e)?;
        Ok(TemporalSeq::Atom(BoolCond::new(cond, CondKind::Active)))
    }

    fn directive(&mut self, origin: Option<Origin>) -> Result<Property, HdlError> {
        let labelled = matches!(self.p.peek(), Tok::Ident(s) if s != "cover" && s != "assume" && s != "forall")
            && matches!(self.p.peek_at(1), Tok::Sym(":"));
        let name = if labelled {
            let n = self.p.ident()?;
            self.p.expect_sym(":")?;
            n
        } else {
            String::new()
        };
        self.frozen.clear();
        while self.p.is_kw("forall") {
            self.p.advance();
            let var = self.p.ident()?;
            self.kw("in")?;
            self.p.expect_sym("{")?;
            let lo = self.number()?;
            self.p.expect_sym(":")?;
            let hi = self.number()?;
            self.p.expect_sym("}")?;
            self.p.expect_sym(":")?;
            let index = match var.strip_prefix('f').and_then(|n| n.parse::<u32>().ok()) {
                Some(i) if lo == 0 => i,
                _ => return self.p.error(&["`f<index> in {0:<max>}`"]),
            };
            self.frozen.push(FrozenVar {
                index,
                width: clog2(hi + 1).max(1),
                max: hi,
            });
        }
        let kind = if self.p.is_kw("cover") {
            PropKind::Cover
        } else if self.p.is_kw("assume") {
            PropKind::Assume
        } else {
            return self.p.error(&["`cover`", "`assume`"]);
        };
        self.p.advance();
        self.p.expect_sym("{")?;
        let body = self.seq()?;
        self.p.expect_sym("}")?;
        self.p.expect_sym(";")?;
        let origin = origin.unwrap_or_else(|| match kind {
            PropKind::Cover => Origin::Path(name.strip_prefix("cover_").unwrap_or(&name).to_string()),
            PropKind::Assume => Origin::Mode(name.clone()),
        });
        Ok(Property {
            name,
            kind,
            origin,
            body,
            frozen: self.frozen.clone(),
        })
    }
}

fn origins(text: &str) -> Vec<Option<Origin>> {
    // one entry per directive, in order; directives end with `};`
    let mut out = Vec::new();
    let mut pending = None;
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("// origin:") {
            let rest = rest.trim();
            pending = if let Some(p) = rest.strip_prefix("path ") {
                Some(Origin::Path(p.trim().to_string()))
            } else {
                rest.strip_prefix("mode ").map(|m| Origin::Mode(m.trim().to_string()))
            };
        } else if t.contains("cover {") || t.contains("assume {") {
            if !t.starts_with("//") {
                out.push(pending.take());
            }
        }
    }
    out
}

/// Parses every directive in `text`; a `default clock` line is skipped.
pub fn parse_psl_file(netlist: &FlatNetlist, text: &str) -> Result<Vec<Property>, PslError> {
    let toks = crate::hdl::tokenize(text)?;
    let mut ps = PslParser {
        p: Parser::new(toks),
        netlist,
        frozen: Vec::new(),
    };
    let mut origins = origins(text).into_iter();
    let mut props = Vec::new();
    while !ps.p.at_eof() {
        if ps.p.is_kw("default") {
            while !ps.p.eat_sym(";") {
                if ps.p.at_eof() {
                    return Err(ps.p.error::<()>(&["`;`"]).unwrap_err().into());
                }
                ps.p.advance();
            }
            continue;
        }
        let origin = origins.next().flatten();
        props.push(ps.directive(origin)?);
    }
    Ok(props)
}

/// Parses a single directive.
pub fn parse_psl(netlist: &FlatNetlist, text: &str) -> Result<Property, PslError> {
    let mut props = parse_psl_file(netlist, text)?;
    if props.len() != 1 {
        return Err(PslError::Count(props.len()));
    }
    Ok(props.pop().expect("one property"))
}
