//! Syntax tree for the supported Verilog subset.
//!
//! Every node carries a [`Span`]. Spans compare equal regardless of position so
//! that `==` on trees is structural equality, which is what the pretty-printer
//! round trip needs.

use std::fmt;

#[derive(Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Debug for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// All modules of one or more source files, in source order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModuleTree {
    pub modules: Vec<Module>,
}

impl ModuleTree {
    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// Modules that are never instantiated by another module.
    pub fn roots(&self) -> Vec<&Module> {
        let used: Vec<&str> = self
            .modules
            .iter()
            .flat_map(|m| m.items.iter())
            .filter_map(|i| match i {
                Item::Instance(inst) => Some(inst.module.as_str()),
                _ => None,
            })
            .collect();
        self.modules
            .iter()
            .filter(|m| !used.contains(&m.name.as_str()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Module {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub ports: Vec<PortDecl>,
    pub items: Vec<Item>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub value: Expr,
    pub local: bool,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PortDecl {
    pub dir: Direction,
    pub is_reg: bool,
    pub signed: bool,
    pub range: Option<Range>,
    pub name: String,
    pub span: Span,
}

/// `[msb:lsb]` with constant expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetKind {
    Wire,
    Reg,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetName {
    pub name: String,
    /// `[first:last]` after the name makes this a memory.
    pub array: Option<Range>,
    /// `wire x = e;` shorthand for a continuous assignment.
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetDecl {
    pub kind: NetKind,
    pub signed: bool,
    pub range: Option<Range>,
    pub names: Vec<NetName>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Net(NetDecl),
    Param(ParamDecl),
    Assign(ContAssign),
    Always(Always),
    Instance(Instance),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContAssign {
    pub lhs: LValue,
    pub rhs: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sensitivity {
    Posedge(String),
    Star,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Always {
    pub sens: Sensitivity,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub module: String,
    pub params: Vec<(String, Expr)>,
    pub name: String,
    pub conns: Vec<Connection>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub port: String,
    /// `.p()` leaves the port unconnected.
    pub expr: Option<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Block(Vec<Stmt>, Span),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
        span: Span,
    },
    Case {
        subject: Expr,
        arms: Vec<CaseArm>,
        default: Option<Box<Stmt>>,
        span: Span,
    },
    Assign {
        lhs: LValue,
        rhs: Expr,
        nonblocking: bool,
        span: Span,
    },
    Empty(Span),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LValue {
    pub name: String,
    pub select: Option<Select>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Select {
    Index(Box<Expr>),
    Part(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Base {
    Bin,
    Oct,
    Dec,
    Hex,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    /// `width: None` is an unsized literal (32 bits).
    Number {
        width: Option<u32>,
        signed: bool,
        base: Base,
        value: u64,
    },
    /// Plain or dotted (`u1.x`) name.
    Ident(String),
    Index(String, Box<Expr>),
    Part(String, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    Repeat(Box<Expr>, Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Signed(Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    LogNot,
    Neg,
    Plus,
    RedAnd,
    RedOr,
    RedXor,
    RedNand,
    RedNor,
    RedXnor,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "~",
            UnaryOp::LogNot => "!",
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedXor => "^",
            UnaryOp::RedNand => "~&",
            UnaryOp::RedNor => "~|",
            UnaryOp::RedXnor => "~^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Mul,
    Add,
    Sub,
    Shl,
    Shr,
    AShl,
    AShr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Xor,
    Xnor,
    Or,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Mul => "*",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::AShl => "<<<",
            BinaryOp::AShr => ">>>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&",
            BinaryOp::Xor => "^",
            BinaryOp::Xnor => "~^",
            BinaryOp::Or => "|",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Mul => 10,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Shl | BinaryOp::Shr | BinaryOp::AShl | BinaryOp::AShr => 8,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::And => 5,
            BinaryOp::Xor | BinaryOp::Xnor => 4,
            BinaryOp::Or => 3,
            BinaryOp::LogAnd => 2,
            BinaryOp::LogOr => 1,
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn ident(name: impl Into<String>) -> Self {
        Expr::new(ExprKind::Ident(name.into()), Span::default())
    }

    pub fn sized(width: u32, value: u64) -> Self {
        let base = if width == 1 { Base::Bin } else { Base::Dec };
        Expr::new(
            ExprKind::Number {
                width: Some(width),
                signed: false,
                base,
                value,
            },
            Span::default(),
        )
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        let span = a.span;
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), span)
    }

    /// Visits every identifier referenced by this expression.
    pub fn for_each_ident(&self, f: &mut impl FnMut(&str)) {
        match &self.kind {
            ExprKind::Number { .. } => {}
            ExprKind::Ident(n) => f(n),
            ExprKind::Index(n, i) => {
                f(n);
                i.for_each_ident(f);
            }
            ExprKind::Part(n, a, b) => {
                f(n);
                a.for_each_ident(f);
                b.for_each_ident(f);
            }
            ExprKind::Concat(items) => items.iter().for_each(|e| e.for_each_ident(f)),
            ExprKind::Repeat(n, items) => {
                n.for_each_ident(f);
                items.iter().for_each(|e| e.for_each_ident(f));
            }
            ExprKind::Unary(_, a) | ExprKind::Signed(a) => a.for_each_ident(f),
            ExprKind::Binary(_, a, b) => {
                a.for_each_ident(f);
                b.for_each_ident(f);
            }
            ExprKind::Ternary(c, a, b) => {
                c.for_each_ident(f);
                a.for_each_ident(f);
                b.for_each_ident(f);
            }
        }
    }
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Block(_, s) | Stmt::Empty(s) => *s,
            Stmt::If { span, .. } | Stmt::Case { span, .. } | Stmt::Assign { span, .. } => *span,
        }
    }
}
