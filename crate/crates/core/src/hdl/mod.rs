//! Verilog-subset frontend: parsing, pretty-printing, elaboration to a flat
//! netlist, and simulation.
//!
//! The accepted language is a small synthesizable subset:
//!
//! * ANSI-style module headers with `#(parameter ...)` lists;
//! * `wire`/`reg` vectors (LSB 0, at most 64 bits) and `reg` memories;
//! * `parameter`/`localparam`, continuous `assign`;
//! * `always @(posedge clk)` and `always @*` with `begin/end`, `if/else`,
//!   `case/default`, blocking and nonblocking assignment;
//! * named-port instances with named parameter overrides;
//! * the usual operators except `/`, `%` and case equality; `$signed`.
//!
//! Values are two-valued; `x`/`z` literals are rejected. Anything outside the
//! subset produces [`HdlError::Unsupported`] naming the construct.
//!
//! Width rules are simplified in one respect: unsized decimal literals are
//! unsigned, so mixing them with `$signed` operands yields unsigned arithmetic.

pub mod ast;
mod elab;
mod error;
mod lexer;
pub mod lower;
pub mod netlist;
mod parser;
mod pretty;
mod render;
mod sim;

pub use ast::{ModuleTree, Span};
pub(crate) use lexer::{tokenize, Tok};
pub(crate) use parser::Parser;
pub use elab::{attach, elaborate, elaborate_with, ElabOptions};
pub use error::{Diagnostic, HdlError, Severity};
pub use netlist::{
    Assignment, BinaryOp, Expr, ExprKind, FlatNetlist, Reset, SignalDecl, SignalId, SignalKind,
    Target, Timing, UnaryOp, ValueEnv,
};
pub use parser::{parse_expr, parse_rtl};
pub use pretty::{expr as pretty_expr, pretty_print};
pub use render::render_with;
pub use sim::Simulator;

/// Parses and concatenates several source files.
pub fn parse_sources(sources: &[(&str, &str)]) -> Result<ModuleTree, (String, HdlError)> {
    let mut tree = ModuleTree::default();
    for (name, text) in sources {
        let t = parse_rtl(text).map_err(|e| (name.to_string(), e))?;
        tree.modules.extend(t.modules);
    }
    Ok(tree)
}
