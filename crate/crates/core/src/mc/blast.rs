//! Word-level expressions to AIG bit vectors (LSB first).
//!
//! The encoding follows [`Expr::eval`] exactly, including out-of-range
//! selects and memory reads returning zero.

use super::aig::{Aig, AigLit};
use crate::hdl::{BinaryOp, Expr, ExprKind, SignalId, UnaryOp};

/// Current-cycle bits of the values an expression reads.
pub trait BitSource {
    fn signal(&self, id: SignalId) -> &[AigLit];
    fn mem_words(&self, id: SignalId) -> &[Vec<AigLit>];
    fn frozen(&self, index: u32) -> &[AigLit];
}

pub fn constant(v: u64, width: u32) -> Vec<AigLit> {
    (0..width).map(|i| Aig::constant(i < 64 && (v >> i) & 1 == 1)).collect()
}

fn or_reduce(g: &mut Aig, x: &[AigLit]) -> AigLit {
    g.or_all(x.iter().copied())
}

pub fn equal(g: &mut Aig, x: &[AigLit], y: &[AigLit]) -> AigLit {
    debug_assert_eq!(x.len(), y.len());
    let bits: Vec<AigLit> = x.iter().zip(y).map(|(&a, &b)| g.xnor(a, b)).collect();
    g.and_all(bits)
}

fn equal_const(g: &mut Aig, x: &[AigLit], v: u64) -> AigLit {
    if x.len() < 64 && v >> x.len() != 0 {
        return AigLit::FALSE;
    }
    let bits: Vec<AigLit> = x
        .iter()
        .enumerate()
        .map(|(i, &b)| if (v >> i) & 1 == 1 { b } else { !b })
        .collect();
    g.and_all(bits)
}

fn add(g: &mut Aig, x: &[AigLit], y: &[AigLit], carry_in: AigLit) -> Vec<AigLit> {
    let mut c = carry_in;
    let mut out = Vec::with_capacity(x.len());
    for (&a, &b) in x.iter().zip(y) {
        let t = g.xor(a, b);
        out.push(g.xor(t, c));
        let g1 = g.and(a, b);
        let g2 = g.and(t, c);
        c = g.or(g1, g2);
    }
    out
}

/// `x < y` unsigned, via the borrow of `x - y`.
fn less_than(g: &mut Aig, x: &[AigLit], y: &[AigLit]) -> AigLit {
    let mut lt = AigLit::FALSE;
    for (&a, &b) in x.iter().zip(y) {
        // from LSB up: lt = (!a & b) | (!(a ^ b) & lt)
        let bit_lt = g.and(!a, b);
        let same = g.xnor(a, b);
        let keep = g.and(same, lt);
        lt = g.or(bit_lt, keep);
    }
    lt
}

fn shift(g: &mut Aig, x: &[AigLit], amount: &[AigLit], left: bool, fill: AigLit) -> Vec<AigLit> {
    let w = x.len();
    let mut cur = x.to_vec();
    let mut overflow = AigLit::FALSE;
    for (k, &bit) in amount.iter().enumerate() {
        let dist = if k < 63 { 1u64 << k } else { u64::MAX };
        if dist >= w as u64 {
            overflow = g.or(overflow, bit);
            continue;
        }
        let d = dist as usize;
        let shifted: Vec<AigLit> = (0..w)
            .map(|i| {
                if left {
                    if i >= d {
                        cur[i - d]
                    } else {
                        AigLit::FALSE
                    }
                } else if i + d < w {
                    cur[i + d]
                } else {
                    fill
                }
            })
            .collect();
        cur = (0..w).map(|i| g.mux(bit, shifted[i], cur[i])).collect();
    }
    let f = if left { AigLit::FALSE } else { fill };
    cur.into_iter().map(|b| g.mux(overflow, f, b)).collect()
}

fn multiply(g: &mut Aig, x: &[AigLit], y: &[AigLit]) -> Vec<AigLit> {
    let w = x.len();
    let mut acc = vec![AigLit::FALSE; w];
    for (k, &yb) in y.iter().enumerate() {
        let partial: Vec<AigLit> = (0..w)
            .map(|i| if i >= k { g.and(x[i - k], yb) } else { AigLit::FALSE })
            .collect();
        acc = add(g, &acc, &partial, AigLit::FALSE);
    }
    acc
}

pub fn blast(g: &mut Aig, e: &Expr, src: &dyn BitSource) -> Vec<AigLit> {
    let w = e.width as usize;
    match &e.kind {
        ExprKind::Const(v) => constant(*v, e.width),
        ExprKind::Signal(s) => src.signal(*s)[..w].to_vec(),
        ExprKind::Slice(s, lsb) => src.signal(*s)[*lsb as usize..*lsb as usize + w].to_vec(),
        ExprKind::BitSel(s, i) => {
            let idx = blast(g, i, src);
            let bits = src.signal(*s).to_vec();
            let hits: Vec<AigLit> = bits
                .iter()
                .enumerate()
                .map(|(j, &b)| {
                    let m = equal_const(g, &idx, j as u64);
                    g.and(m, b)
                })
                .collect();
            vec![g.or_all(hits)]
        }
        ExprKind::MemRead(m, a) => {
            let addr = blast(g, a, src);
            let words = src.mem_words(*m).to_vec();
            let mut out = vec![AigLit::FALSE; w];
            for (j, word) in words.iter().enumerate() {
                let sel = equal_const(g, &addr, j as u64);
                for (o, &b) in out.iter_mut().zip(word) {
                    let t = g.and(sel, b);
                    *o = g.or(*o, t);
                }
            }
            out
        }
        ExprKind::Frozen(i) => src.frozen(*i)[..w].to_vec(),
        ExprKind::Unary(op, a) => {
            let x = blast(g, a, src);
            match op {
                UnaryOp::Not => x.iter().map(|&b| !b).collect(),
                UnaryOp::Neg => {
                    let inv: Vec<AigLit> = x.iter().map(|&b| !b).collect();
                    let zero = vec![AigLit::FALSE; x.len()];
                    add(g, &inv, &zero, AigLit::TRUE)
                }
                UnaryOp::LogNot => vec![!or_reduce(g, &x)],
                UnaryOp::RedOr => vec![or_reduce(g, &x)],
                UnaryOp::RedAnd => vec![g.and_all(x.iter().copied())],
                UnaryOp::RedXor => vec![x.iter().fold(AigLit::FALSE, |acc, &b| g.xor(acc, b))],
            }
        }
        ExprKind::Binary(op, a, b) => {
            let x = blast(g, a, src);
            let y = blast(g, b, src);
            use BinaryOp::*;
            match op {
                And => x.iter().zip(&y).map(|(&p, &q)| g.and(p, q)).collect(),
                Or => x.iter().zip(&y).map(|(&p, &q)| g.or(p, q)).collect(),
                Xor => x.iter().zip(&y).map(|(&p, &q)| g.xor(p, q)).collect(),
                Add => add(g, &x, &y, AigLit::FALSE),
                Sub => {
                    let ny: Vec<AigLit> = y.iter().map(|&q| !q).collect();
                    add(g, &x, &ny, AigLit::TRUE)
                }
                Mul => multiply(g, &x, &y),
                Shl => shift(g, &x, &y, true, AigLit::FALSE),
                Shr => shift(g, &x, &y, false, AigLit::FALSE),
                Sar => {
                    let sign = *x.last().expect("non-empty");
                    shift(g, &x, &y, false, sign)
                }
                Eq => vec![equal(g, &x, &y)],
                Ne => vec![!equal(g, &x, &y)],
                Ult => vec![less_than(g, &x, &y)],
                Ugt => vec![less_than(g, &y, &x)],
                Ule => vec![!less_than(g, &y, &x)],
                Uge => vec![!less_than(g, &x, &y)],
                Slt | Sgt | Sle | Sge => {
                    let flip = |v: &[AigLit]| {
                        let mut v = v.to_vec();
                        let last = v.len() - 1;
                        v[last] = !v[last];
                        v
                    };
                    let (sx, sy) = (flip(&x), flip(&y));
                    match op {
                        Slt => vec![less_than(g, &sx, &sy)],
                        Sgt => vec![less_than(g, &sy, &sx)],
                        Sle => vec![!less_than(g, &sy, &sx)],
                        _ => vec![!less_than(g, &sx, &sy)],
                    }
                }
                LogAnd => {
                    let p = or_reduce(g, &x);
                    let q = or_reduce(g, &y);
                    vec![g.and(p, q)]
                }
                LogOr => {
                    let p = or_reduce(g, &x);
                    let q = or_reduce(g, &y);
                    vec![g.or(p, q)]
                }
            }
        }
        ExprKind::Mux(c, a, b) => {
            let cb = blast(g, c, src);
            let sel = or_reduce(g, &cb);
            let x = blast(g, a, src);
            let y = blast(g, b, src);
            x.iter().zip(&y).map(|(&p, &q)| g.mux(sel, p, q)).collect()
        }
        ExprKind::Concat(items) => {
            let mut out = Vec::with_capacity(w);
            for item in items.iter().rev() {
                out.extend(blast(g, item, src));
            }
            out
        }
        ExprKind::Resize(a, signed) => {
            let mut x = blast(g, a, src);
            if x.len() >= w {
                x.truncate(w);
            } else {
                let fill = if *signed {
                    *x.last().expect("non-empty")
                } else {
                    AigLit::FALSE
                };
                x.resize(w, fill);
            }
            x
        }
    }
}

/// Truth value (`!= 0`) of a blasted vector.
pub fn truthy(g: &mut Aig, bits: &[AigLit]) -> AigLit {
    or_reduce(g, bits)
}
