use serde::Serialize;

use crate::hdl::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CondKind {
    Active,
    Alive,
    BlockActive,
    Assumption,
}

/// A Boolean-layer condition. Equality ignores `kind`, which is not part of
/// the emitted text.
#[derive(Clone, Debug, Eq)]
pub struct BoolCond {
    pub expr: Expr,
    pub kind: CondKind,
}

impl PartialEq for BoolCond {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

impl BoolCond {
    pub fn new(expr: Expr, kind: CondKind) -> Self {
        debug_assert_eq!(expr.width, 1);
        BoolCond { expr, kind }
    }
}

/// Sequence over cycle-indexed Boolean conditions.
///
/// * `Atom(c)`: one cycle in which `c` holds.
/// * `Concat(a, b)`: `a` then `b` starting in the next cycle (`a ; b`).
/// * `Fuse(a, b)`: `a` then `b` overlapping in one cycle (`a : b`).
/// * `RepInf(a)`: zero or more consecutive matches of `a` (`a[*]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TemporalSeq {
    Atom(BoolCond),
    Fuse(Box<TemporalSeq>, Box<TemporalSeq>),
    Concat(Box<TemporalSeq>, Box<TemporalSeq>),
    RepInf(Box<TemporalSeq>),
}

impl TemporalSeq {
    pub fn atom(expr: Expr, kind: CondKind) -> Self {
        TemporalSeq::Atom(BoolCond::new(expr, kind))
    }

    pub fn fuse(a: TemporalSeq, b: TemporalSeq) -> Self {
        TemporalSeq::Fuse(Box::new(a), Box::new(b))
    }

    pub fn concat(a: TemporalSeq, b: TemporalSeq) -> Self {
        TemporalSeq::Concat(Box::new(a), Box::new(b))
    }

    pub fn rep(a: TemporalSeq) -> Self {
        TemporalSeq::RepInf(Box::new(a))
    }

    pub fn nodes(&self) -> usize {
        match self {
            TemporalSeq::Atom(_) => 1,
            TemporalSeq::Fuse(a, b) | TemporalSeq::Concat(a, b) => 1 + a.nodes() + b.nodes(),
            TemporalSeq::RepInf(a) => 1 + a.nodes(),
        }
    }

    /// Matches the empty trace.
    pub fn nullable(&self) -> bool {
        match self {
            TemporalSeq::Atom(_) | TemporalSeq::Fuse(..) => false,
            TemporalSeq::Concat(a, b) => a.nullable() && b.nullable(),
            TemporalSeq::RepInf(_) => true,
        }
    }

    /// Atoms in left-to-right order.
    pub fn atoms(&self) -> Vec<&BoolCond> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a BoolCond>) {
        match self {
            TemporalSeq::Atom(c) => out.push(c),
            TemporalSeq::Fuse(a, b) | TemporalSeq::Concat(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            TemporalSeq::RepInf(a) => a.collect_atoms(out),
        }
    }

    /// Same shape with every atom replaced by `f(atom)`.
    pub fn map_atoms(&self, f: &mut impl FnMut(&BoolCond) -> BoolCond) -> TemporalSeq {
        match self {
            TemporalSeq::Atom(c) => TemporalSeq::Atom(f(c)),
            TemporalSeq::Fuse(a, b) => TemporalSeq::fuse(a.map_atoms(f), b.map_atoms(f)),
            TemporalSeq::Concat(a, b) => TemporalSeq::concat(a.map_atoms(f), b.map_atoms(f)),
            TemporalSeq::RepInf(a) => TemporalSeq::rep(a.map_atoms(f)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PropKind {
    Cover,
    Assume,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Leakage path id.
    Path(String),
    /// Verification-mode assumption bundle.
    Mode(String),
}

/// A value chosen freely at time zero and held forever; used to name "the
/// memory word the secret sits in".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FrozenVar {
    pub index: u32,
    pub width: u32,
    /// Largest allowed value (the memory depth minus one).
    pub max: u64,
}

impl FrozenVar {
    pub fn name(&self) -> String {
        format!("f{}", self.index)
    }
}

/// A cover or assume directive.
///
/// Cover bodies are matched starting at any cycle. Assume bodies are single
/// atoms that must hold in every cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub kind: PropKind,
    pub origin: Origin,
    pub body: TemporalSeq,
    pub frozen: Vec<FrozenVar>,
}

impl Property {
    pub fn assume(name: impl Into<String>, mode: &str, cond: Expr) -> Self {
        Property {
            name: name.into(),
            kind: PropKind::Assume,
            origin: Origin::Mode(mode.to_string()),
            body: TemporalSeq::atom(cond, CondKind::Assumption),
            frozen: Vec::new(),
        }
    }

    /// The invariant of an assume property.
    pub fn invariant(&self) -> Option<&Expr> {
        match (&self.kind, &self.body) {
            (PropKind::Assume, TemporalSeq::Atom(c)) => Some(&c.expr),
            _ => None,
        }
    }
}
