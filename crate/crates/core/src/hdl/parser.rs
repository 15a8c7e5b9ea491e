use super::ast::*;
use super::error::HdlError;
use super::lexer::{tokenize, Tok, Token};

const RESERVED: &[&str] = &[
    "module", "endmodule", "input", "output", "inout", "wire", "reg", "integer", "parameter",
    "localparam", "assign", "always", "posedge", "negedge", "begin", "end", "if", "else", "case",
    "casez", "casex", "endcase", "default", "initial", "generate", "endgenerate", "function",
    "endfunction", "task", "endtask", "for", "while", "signed", "genvar", "or", "logic",
    "always_ff", "always_comb", "forever", "repeat", "real", "time", "supply0", "supply1", "tri",
];

/// Parses one source text into a module tree.
pub fn parse_rtl(text: &str) -> Result<ModuleTree, HdlError> {
    let mut p = Parser::new(tokenize(text)?);
    let mut tree = ModuleTree::default();
    while !p.at_eof() {
        tree.modules.push(p.module()?);
    }
    Ok(tree)
}

/// Parses a standalone expression (used by the property layer).
pub fn parse_expr(text: &str) -> Result<Expr, HdlError> {
    let mut p = Parser::new(tokenize(text)?);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error<T>(&self, expected: &[&str]) -> Result<T, HdlError> {
        Err(HdlError::Syntax {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub(crate) fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<Span, HdlError> {
        if self.is_sym(s) {
            Ok(self.advance().span)
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<Span, HdlError> {
        if self.is_kw(s) {
            Ok(self.advance().span)
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    pub(crate) fn expect_eof(&self) -> Result<(), HdlError> {
        if self.at_eof() {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, HdlError> {
        match self.peek() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn reject_keyword(&self) -> Result<(), HdlError> {
        if let Tok::Ident(s) = self.peek() {
            if RESERVED.contains(&s.as_str()) {
                return Err(HdlError::unsupported(self.span(), format!("`{s}`")));
            }
        }
        Ok(())
    }

    fn module(&mut self) -> Result<Module, HdlError> {
        let span = self.expect_kw("module")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            loop {
                let pspan = self.span();
                self.eat_kw("parameter");
                if self.is_kw("integer") || self.is_kw("signed") {
                    return Err(HdlError::unsupported(self.span(), "typed parameter"));
                }
                let pname = self.ident()?;
                self.expect_sym("=")?;
                let value = self.expr()?;
                params.push(ParamDecl {
                    name: pname,
                    value,
                    local: false,
                    span: pspan,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        let mut ports = Vec::new();
        if self.eat_sym("(") {
            if !self.is_sym(")") {
                self.ports(&mut ports)?;
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        let mut items = Vec::new();
        while !self.is_kw("endmodule") {
            if self.at_eof() {
                return self.error(&["`endmodule`"]);
            }
            self.item(&mut items)?;
        }
        self.advance();
        Ok(Module {
            name,
            params,
            ports,
            items,
            span,
        })
    }

    fn ports(&mut self, ports: &mut Vec<PortDecl>) -> Result<(), HdlError> {
        let mut last: Option<PortDecl> = None;
        loop {
            let span = self.span();
            let decl = if self.is_kw("input") || self.is_kw("output") {
                let dir = if self.eat_kw("input") {
                    Direction::Input
                } else {
                    self.advance();
                    Direction::Output
                };
                let is_reg = if self.eat_kw("reg") {
                    true
                } else {
                    self.eat_kw("wire");
                    false
                };
                let signed = self.eat_kw("signed");
                let range = self.opt_range()?;
                let name = self.ident()?;
                PortDecl {
                    dir,
                    is_reg,
                    signed,
                    range,
                    name,
                    span,
                }
            } else if self.is_kw("inout") {
                return Err(HdlError::unsupported(span, "inout port"));
            } else if let Some(prev) = &last {
                // `input [7:0] a, b` shares the previous declaration
                if !matches!(self.peek(), Tok::Ident(_)) {
                    return self.error(&["port declaration"]);
                }
                let name = self.ident().map_err(|_| {
                    HdlError::unsupported(span, "non-ANSI port list")
                })?;
                PortDecl {
                    name,
                    span,
                    ..prev.clone()
                }
            } else {
                return Err(HdlError::unsupported(span, "non-ANSI port list"));
            };
            last = Some(decl.clone());
            ports.push(decl);
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    fn opt_range(&mut self) -> Result<Option<Range>, HdlError> {
        if !self.eat_sym("[") {
            return Ok(None);
        }
        let msb = self.expr()?;
        self.expect_sym(":")?;
        let lsb = self.expr()?;
        self.expect_sym("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn item(&mut self, items: &mut Vec<Item>) -> Result<(), HdlError> {
        let span = self.span();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.error(&["module item"]),
        };
        match kw.as_str() {
            "wire" | "reg" => {
                self.advance();
                let kind = if kw == "wire" { NetKind::Wire } else { NetKind::Reg };
                let signed = self.eat_kw("signed");
                let range = self.opt_range()?;
                let mut names = Vec::new();
                loop {
                    let nspan = self.span();
                    let name = self.ident()?;
                    let array = self.opt_range()?;
                    let init = if self.eat_sym("=") {
                        if kind == NetKind::Reg {
                            return Err(HdlError::unsupported(nspan, "register initializer"));
                        }
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    names.push(NetName {
                        name,
                        array,
                        init,
                        span: nspan,
                    });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
                items.push(Item::Net(NetDecl {
                    kind,
                    signed,
                    range,
                    names,
                    span,
                }));
            }
            "parameter" | "localparam" => {
                self.advance();
                if self.is_kw("integer") || self.is_kw("signed") || self.is_sym("[") {
                    return Err(HdlError::unsupported(self.span(), "typed parameter"));
                }
                loop {
                    let pspan = self.span();
                    let name = self.ident()?;
                    self.expect_sym("=")?;
                    let value = self.expr()?;
                    items.push(Item::Param(ParamDecl {
                        name,
                        value,
                        local: kw == "localparam",
                        span: pspan,
                    }));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
            }
            "assign" => {
                self.advance();
                loop {
                    let aspan = self.span();
                    let lhs = self.lvalue()?;
                    self.expect_sym("=")?;
                    let rhs = self.expr()?;
                    items.push(Item::Assign(ContAssign {
                        lhs,
                        rhs,
                        span: aspan,
                    }));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
            }
            "always" => {
                self.advance();
                self.expect_sym("@")?;
                let sens = if self.eat_sym("*") {
                    Sensitivity::Star
                } else {
                    self.expect_sym("(")?;
                    let s = if self.eat_sym("*") {
                        Sensitivity::Star
                    } else if self.eat_kw("posedge") {
                        let clk = self.ident()?;
                        if self.is_kw("or") || self.is_sym(",") {
                            return Err(HdlError::unsupported(
                                self.span(),
                                "multi-edge sensitivity list (asynchronous reset)",
                            ));
                        }
                        Sensitivity::Posedge(clk)
                    } else if self.is_kw("negedge") {
                        return Err(HdlError::unsupported(self.span(), "negedge clocking"));
                    } else {
                        return Err(HdlError::unsupported(
                            self.span(),
                            "explicit sensitivity list (use @*)",
                        ));
                    };
                    self.expect_sym(")")?;
                    s
                };
                let body = self.stmt()?;
                items.push(Item::Always(Always { sens, body, span }));
            }
            "initial" | "generate" | "function" | "task" | "integer" | "genvar" | "always_ff"
            | "always_comb" | "inout" | "real" | "time" | "supply0" | "supply1" | "tri"
            | "logic" => {
                return Err(HdlError::unsupported(span, format!("`{kw}`")));
            }
            "input" | "output" => {
                return Err(HdlError::unsupported(span, "port declaration in module body"));
            }
            _ => {
                let inst = self.instance()?;
                items.push(Item::Instance(inst));
            }
        }
        Ok(())
    }

    fn instance(&mut self) -> Result<Instance, HdlError> {
        let span = self.span();
        self.reject_keyword()?;
        let module = self.ident()?;
        let mut params = Vec::new();
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            loop {
                if !self.is_sym(".") {
                    return Err(HdlError::unsupported(self.span(), "positional parameter override"));
                }
                self.advance();
                let name = self.ident()?;
                self.expect_sym("(")?;
                let value = self.expr()?;
                self.expect_sym(")")?;
                params.push((name, value));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        let name = self.ident()?;
        if self.is_sym("[") {
            return Err(HdlError::unsupported(self.span(), "instance array"));
        }
        self.expect_sym("(")?;
        let mut conns = Vec::new();
        if !self.is_sym(")") {
            loop {
                let cspan = self.span();
                if !self.is_sym(".") {
                    return Err(HdlError::unsupported(cspan, "positional port connection"));
                }
                self.advance();
                let port = self.ident()?;
                self.expect_sym("(")?;
                let expr = if self.is_sym(")") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_sym(")")?;
                conns.push(Connection {
                    port,
                    expr,
                    span: cspan,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym(";")?;
        Ok(Instance {
            module,
            params,
            name,
            conns,
            span,
        })
    }

    fn lvalue(&mut self) -> Result<LValue, HdlError> {
        let span = self.span();
        if self.is_sym("{") {
            return Err(HdlError::unsupported(span, "concatenation on assignment left-hand side"));
        }
        let name = self.ident()?;
        let select = if self.eat_sym("[") {
            let a = self.expr()?;
            let sel = if self.eat_sym(":") {
                let b = self.expr()?;
                Select::Part(Box::new(a), Box::new(b))
            } else if self.is_sym("+:") || self.is_sym("-:") {
                return Err(HdlError::unsupported(self.span(), "indexed part-select"));
            } else {
                Select::Index(Box::new(a))
            };
            self.expect_sym("]")?;
            if self.is_sym("[") {
                return Err(HdlError::unsupported(self.span(), "multi-dimensional select"));
            }
            Some(sel)
        } else {
            None
        };
        Ok(LValue { name, select, span })
    }

    fn stmt(&mut self) -> Result<Stmt, HdlError> {
        let span = self.span();
        if self.eat_sym(";") {
            return Ok(Stmt::Empty(span));
        }
        if self.eat_kw("begin") {
            if self.is_sym(":") {
                return Err(HdlError::unsupported(span, "named block"));
            }
            let mut body = Vec::new();
            while !self.is_kw("end") {
                if self.at_eof() {
                    return self.error(&["`end`"]);
                }
                body.push(self.stmt()?);
            }
            self.advance();
            return Ok(Stmt::Block(body, span));
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then = Box::new(self.stmt()?);
            let els = if self.eat_kw("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(Stmt::If {
                cond,
                then,
                els,
                span,
            });
        }
        if self.is_kw("casez") || self.is_kw("casex") {
            return Err(HdlError::unsupported(span, "wildcard case"));
        }
        if self.eat_kw("case") {
            self.expect_sym("(")?;
            let subject = self.expr()?;
            self.expect_sym(")")?;
            let mut arms = Vec::new();
            let mut default = None;
            while !self.is_kw("endcase") {
                if self.at_eof() {
                    return self.error(&["`endcase`"]);
                }
                let aspan = self.span();
                if self.eat_kw("default") {
                    self.eat_sym(":");
                    if default.is_some() {
                        return Err(HdlError::elab(aspan, "duplicate default arm"));
                    }
                    default = Some(Box::new(self.stmt()?));
                    continue;
                }
                let mut labels = vec![self.expr()?];
                while self.eat_sym(",") {
                    labels.push(self.expr()?);
                }
                self.expect_sym(":")?;
                let body = self.stmt()?;
                arms.push(CaseArm {
                    labels,
                    body,
                    span: aspan,
                });
            }
            self.advance();
            return Ok(Stmt::Case {
                subject,
                arms,
                default,
                span,
            });
        }
        if let Tok::Ident(k) = self.peek() {
            if matches!(k.as_str(), "for" | "while" | "forever" | "repeat") {
                return Err(HdlError::unsupported(span, format!("`{k}` loop")));
            }
        }
        if matches!(self.peek(), Tok::System(_)) {
            return Err(HdlError::unsupported(span, "system task"));
        }
        let lhs = self.lvalue()?;
        let nonblocking = if self.eat_sym("<=") {
            true
        } else if self.eat_sym("=") {
            false
        } else {
            return self.error(&["`=`", "`<=`"]);
        };
        if self.is_sym("#") {
            return Err(HdlError::unsupported(self.span(), "delay control"));
        }
        let rhs = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::Assign {
            lhs,
            rhs,
            nonblocking,
            span,
        })
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, HdlError> {
        let cond = self.binary(1)?;
        if self.is_sym("?") {
            let span = cond.span;
            self.advance();
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(Expr::new(
                ExprKind::Ternary(Box::new(cond), Box::new(a), Box::new(b)),
                span,
            ));
        }
        Ok(cond)
    }

    fn binop(&self) -> Result<Option<BinaryOp>, HdlError> {
        let op = match self.peek() {
            Tok::Sym(s) => match *s {
                "*" => BinaryOp::Mul,
                "+" => BinaryOp::Add,
                "-" => BinaryOp::Sub,
                "<<" => BinaryOp::Shl,
                ">>" => BinaryOp::Shr,
                "<<<" => BinaryOp::AShl,
                ">>>" => BinaryOp::AShr,
                "<" => BinaryOp::Lt,
                "<=" => BinaryOp::Le,
                ">" => BinaryOp::Gt,
                ">=" => BinaryOp::Ge,
                "==" => BinaryOp::Eq,
                "!=" => BinaryOp::Ne,
                "&" => BinaryOp::And,
                "^" => BinaryOp::Xor,
                "~^" | "^~" => BinaryOp::Xnor,
                "|" => BinaryOp::Or,
                "&&" => BinaryOp::LogAnd,
                "||" => BinaryOp::LogOr,
                "/" | "%" | "===" | "!==" => {
                    return Err(HdlError::unsupported(self.span(), format!("operator `{s}`")))
                }
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        Ok(Some(op))
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, HdlError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop()? {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, HdlError> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Sym("~") => Some(UnaryOp::Not),
            Tok::Sym("!") => Some(UnaryOp::LogNot),
            Tok::Sym("-") => Some(UnaryOp::Neg),
            Tok::Sym("+") => Some(UnaryOp::Plus),
            Tok::Sym("&") => Some(UnaryOp::RedAnd),
            Tok::Sym("|") => Some(UnaryOp::RedOr),
            Tok::Sym("^") => Some(UnaryOp::RedXor),
            Tok::Sym("~&") => Some(UnaryOp::RedNand),
            Tok::Sym("~|") => Some(UnaryOp::RedNor),
            Tok::Sym("~^") | Tok::Sym("^~") => Some(UnaryOp::RedXnor),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let a = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(a)), span));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, HdlError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number {
                width,
                signed,
                base,
                value,
            } => {
                self.advance();
                Ok(Expr::new(
                    ExprKind::Number {
                        width,
                        signed,
                        base,
                        value,
                    },
                    span,
                ))
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.advance();
                let first = self.expr()?;
                if self.eat_sym("{") {
                    let mut items = vec![self.expr()?];
                    while self.eat_sym(",") {
                        items.push(self.expr()?);
                    }
                    self.expect_sym("}")?;
                    self.expect_sym("}")?;
                    return Ok(Expr::new(ExprKind::Repeat(Box::new(first), items), span));
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(Expr::new(ExprKind::Concat(items), span))
            }
            Tok::System(name) => {
                self.advance();
                if name != "signed" {
                    return Err(HdlError::unsupported(span, format!("system function `${name}`")));
                }
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::new(ExprKind::Signed(Box::new(e)), span))
            }
            Tok::Ident(_) => {
                self.reject_keyword()?;
                let mut name = self.ident()?;
                while self.is_sym(".") && matches!(self.peek_at(1), Tok::Ident(_)) {
                    self.advance();
                    name.push('.');
                    name.push_str(&self.ident()?);
                }
                if self.is_sym("(") {
                    return Err(HdlError::unsupported(span, "function call"));
                }
                if !self.eat_sym("[") {
                    return Ok(Expr::new(ExprKind::Ident(name), span));
                }
                let a = self.expr()?;
                let e = if self.eat_sym(":") {
                    let b = self.expr()?;
                    ExprKind::Part(name, Box::new(a), Box::new(b))
                } else if self.is_sym("+:") || self.is_sym("-:") {
                    return Err(HdlError::unsupported(self.span(), "indexed part-select"));
                } else {
                    ExprKind::Index(name, Box::new(a))
                };
                self.expect_sym("]")?;
                if self.is_sym("[") {
                    return Err(HdlError::unsupported(self.span(), "multi-dimensional select"));
                }
                Ok(Expr::new(e, span))
            }
            _ => self.error(&["expression"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_module_with_ports() {
        let t = parse_rtl("module m(input a, output [3:0] b); endmodule").unwrap();
        assert_eq!(t.modules.len(), 1);
        assert_eq!(t.modules[0].ports.len(), 2);
        assert!(t.modules[0].items.is_empty());
    }

    #[test]
    fn precedence_is_standard() {
        let e = parse_expr("a + b << 1 == c & d || e").unwrap();
        match e.kind {
            ExprKind::Binary(BinaryOp::LogOr, l, _) => match l.kind {
                ExprKind::Binary(BinaryOp::And, l2, _) => {
                    assert!(matches!(l2.kind, ExprKind::Binary(BinaryOp::Eq, _, _)))
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position_and_expectation() {
        let err = parse_rtl("module m;\n  assign = 1;\nendmodule").unwrap_err();
        match err {
            HdlError::Syntax { span, expected, .. } => {
                assert_eq!((span.line, span.col), (2, 10));
                assert_eq!(expected, vec!["identifier".to_string()]);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unsupported_constructs_are_named() {
        for (src, what) in [
            ("module m; initial x = 1; endmodule", "initial"),
            ("module m(input c); reg r; always @(negedge c) r <= 1; endmodule", "negedge"),
            ("module m; reg r; always @* r = a / b; endmodule", "/"),
            ("module m; generate endgenerate endmodule", "generate"),
        ] {
            let err = parse_rtl(src).unwrap_err();
            assert!(
                matches!(&err, HdlError::Unsupported { construct, .. } if construct.contains(what)),
                "{src}: {err}"
            );
        }
    }
}
