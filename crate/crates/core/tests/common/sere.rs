//! Reference semantics of sequences over three one-bit atoms.
//!
//! A word of length `m` is a base-8 number whose most significant digit is
//! the first cycle; digit bit `k` is the value of atom `k`. A language is
//! kept as one bitset per word length up to [`MAX_LEN`].

use std::rc::Rc;

use leakcover::hdl::{elaborate, parse_rtl, Expr, FlatNetlist, SignalId, ValueEnv};
use leakcover::mc::Nfa;
use leakcover::property::{CondKind, TemporalSeq};

pub const MAX_LEN: usize = 6;

pub struct Atoms {
    pub netlist: FlatNetlist,
    pub ids: [SignalId; 3],
}

impl Atoms {
    pub fn new() -> Self {
        let netlist = elaborate(&parse_rtl("module atoms(input a, input b, input c); endmodule").unwrap()).unwrap();
        let ids = ["a", "b", "c"].map(|n| netlist.lookup(n).unwrap());
        Atoms { netlist, ids }
    }

    pub fn atom(&self, k: usize) -> TemporalSeq {
        TemporalSeq::atom(Expr::signal(self.ids[k], 1), CondKind::Active)
    }

    pub fn index(&self, e: &Expr) -> usize {
        let s = e.signals();
        let id = s.iter().next().expect("atom names a signal");
        self.ids.iter().position(|x| x == id).unwrap()
    }
}

/// One cycle's atom values.
pub struct Letter<'a> {
    pub ids: &'a [SignalId; 3],
    pub bits: u8,
}

impl ValueEnv for Letter<'_> {
    fn signal(&self, id: SignalId) -> u64 {
        let k = self.ids.iter().position(|&x| x == id).expect("atom signal");
        u64::from((self.bits >> k) & 1)
    }
    fn mem_word(&self, _: SignalId, _: u64) -> u64 {
        0
    }
    fn frozen(&self, _: u32) -> u64 {
        0
    }
}

fn words(m: usize) -> usize {
    8usize.pow(m as u32)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lang(pub Vec<Vec<u64>>);

fn get(s: &[u64], i: usize) -> bool {
    s[i / 64] >> (i % 64) & 1 == 1
}

fn set(s: &mut [u64], i: usize) {
    s[i / 64] |= 1 << (i % 64);
}

fn bits(s: &[u64]) -> impl Iterator<Item = usize> + '_ {
    s.iter().enumerate().flat_map(|(w, &x)| {
        (0..64).filter(move |b| x >> b & 1 == 1).map(move |b| w * 64 + b)
    })
}

fn or_block(dst: &mut [u64], dst_off: usize, src: &[u64], src_off: usize, len: usize) {
    if len % 64 == 0 && dst_off % 64 == 0 && src_off % 64 == 0 {
        let (d, s) = (dst_off / 64, src_off / 64);
        for k in 0..len / 64 {
            dst[d + k] |= src[s + k];
        }
    } else {
        for k in 0..len {
            if get(src, src_off + k) {
                set(dst, dst_off + k);
            }
        }
    }
}

impl Lang {
    pub fn empty() -> Self {
        Lang((0..=MAX_LEN).map(|m| vec![0; words(m).div_ceil(64)]).collect())
    }

    pub fn contains(&self, word: &[u8]) -> bool {
        let w = word.iter().fold(0usize, |acc, &l| acc * 8 + l as usize);
        get(&self.0[word.len()], w)
    }

    /// Number of nonempty words in the language.
    pub fn count(&self) -> usize {
        self.0[1..].iter().map(|s| s.iter().map(|x| x.count_ones() as usize).sum::<usize>()).sum()
    }

    fn atom(k: usize) -> Self {
        let mut l = Lang::empty();
        for letter in 0..8 {
            if letter >> k & 1 == 1 {
                set(&mut l.0[1], letter);
            }
        }
        l
    }

    /// `u·v` for `u` in `a[p]`, `v` in `b[q]`, into `out[p + q]`.
    fn cat_into(out: &mut Lang, a: &Lang, b: &Lang) {
        for m in 0..=MAX_LEN {
            for p in 0..=m {
                let q = m - p;
                let block = words(q);
                let (head, tail) = (&a.0[p], &b.0[q]);
                for u in bits(head) {
                    or_block(&mut out.0[m], u * block, tail, 0, block);
                }
            }
        }
    }

    fn concat(a: &Lang, b: &Lang) -> Self {
        let mut out = Lang::empty();
        Lang::cat_into(&mut out, a, b);
        out
    }

    /// `u·l·v` for `u·l` in `a`, `l·v` in `b`.
    fn fuse(a: &Lang, b: &Lang) -> Self {
        let mut out = Lang::empty();
        for m in 1..=MAX_LEN {
            for p in 1..=m {
                let q = m + 1 - p;
                let block = words(q - 1);
                for u in bits(&a.0[p]) {
                    let l = u % 8;
                    or_block(&mut out.0[m], u * block, &b.0[q], l * block, block);
                }
            }
        }
        out
    }

    fn rep(a: &Lang) -> Self {
        let mut out = Lang::empty();
        set(&mut out.0[0], 0);
        for m in 1..=MAX_LEN {
            for p in 1..=m {
                let q = m - p;
                let block = words(q);
                let tail = out.0[q].clone();
                for u in bits(&a.0[p]) {
                    or_block(&mut out.0[m], u * block, &tail, 0, block);
                }
            }
        }
        out
    }
}

/// Language of a sequence, from the recursive definition of each operator.
pub fn language(atoms: &Atoms, s: &TemporalSeq) -> Lang {
    match s {
        TemporalSeq::Atom(c) => Lang::atom(atoms.index(&c.expr)),
        TemporalSeq::Concat(a, b) => Lang::concat(&language(atoms, a), &language(atoms, b)),
        TemporalSeq::Fuse(a, b) => Lang::fuse(&language(atoms, a), &language(atoms, b)),
        TemporalSeq::RepInf(a) => Lang::rep(&language(atoms, a)),
    }
}

/// Whether `s` matches exactly `w`, by trying every split.
pub fn matches(atoms: &Atoms, s: &TemporalSeq, w: &[u8]) -> bool {
    match s {
        TemporalSeq::Atom(c) => w.len() == 1 && w[0] >> atoms.index(&c.expr) & 1 == 1,
        TemporalSeq::Concat(a, b) => (0..=w.len()).any(|k| matches(atoms, a, &w[..k]) && matches(atoms, b, &w[k..])),
        TemporalSeq::Fuse(a, b) => (1..=w.len()).any(|k| matches(atoms, a, &w[..k]) && matches(atoms, b, &w[k - 1..])),
        TemporalSeq::RepInf(a) => w.is_empty() || (1..=w.len()).any(|k| matches(atoms, a, &w[..k]) && matches(atoms, s, &w[k..])),
    }
}

/// Words of length 1..=MAX_LEN that `nfa` accepts, by backward reachability
/// from the accepting states.
pub fn nfa_language(atoms: &Atoms, nfa: &Nfa) -> Lang {
    let n = nfa.num_states;
    // fires[t][l]: transition t is enabled by letter l
    let fires: Vec<[bool; 8]> = nfa
        .trans
        .iter()
        .map(|t| {
            std::array::from_fn(|l| {
                t.cond.eval(&Letter {
                    ids: &atoms.ids,
                    bits: l as u8,
                }) != 0
            })
        })
        .collect();
    let mut from: Vec<Lang> = (0..n).map(|_| Lang::empty()).collect();
    for &q in &nfa.accept {
        set(&mut from[q].0[0], 0);
    }
    for m in 1..=MAX_LEN {
        let block = words(m - 1);
        for (t, tr) in nfa.trans.iter().enumerate() {
            let tail = from[tr.to].0[m - 1].clone();
            for l in 0..8 {
                if fires[t][l] {
                    or_block(&mut from[tr.from].0[m], l * block, &tail, 0, block);
                }
            }
        }
    }
    let mut out = Lang::empty();
    for &q in &nfa.start {
        for m in 1..=MAX_LEN {
            for (d, s) in out.0[m].iter_mut().zip(&from[q].0[m]) {
                *d |= s;
            }
        }
    }
    out
}

/// Calls `f` on every sequence of at most `max_nodes` nodes over the three
/// atoms, together with its reference language.
pub fn for_each_sequence(atoms: &Atoms, max_nodes: usize, mut f: impl FnMut(&TemporalSeq, &Lang)) {
    let mut by_size: Vec<Vec<(TemporalSeq, Rc<Lang>)>> = vec![Vec::new()];
    for n in 1..=max_nodes {
        let mut level = Vec::new();
        let mut emit = |s: TemporalSeq, l: Lang, level: &mut Vec<(TemporalSeq, Rc<Lang>)>| {
            f(&s, &l);
            if n < max_nodes {
                level.push((s, Rc::new(l)));
            }
        };
        if n == 1 {
            for k in 0..3 {
                emit(atoms.atom(k), Lang::atom(k), &mut level);
            }
        } else {
            for (s, l) in &by_size[n - 1] {
                emit(TemporalSeq::rep(s.clone()), Lang::rep(l), &mut level);
            }
            for i in 1..n - 1 {
                let j = n - 1 - i;
                for (a, la) in &by_size[i] {
                    for (b, lb) in &by_size[j] {
                        emit(TemporalSeq::concat(a.clone(), b.clone()), Lang::concat(la, lb), &mut level);
                        emit(TemporalSeq::fuse(a.clone(), b.clone()), Lang::fuse(la, lb), &mut level);
                    }
                }
            }
        }
        by_size.push(level);
    }
}

/// Every word of length 1..=MAX_LEN, in length order.
pub fn all_words(max_len: usize) -> impl Iterator<Item = Vec<u8>> {
    (1..=max_len).flat_map(|m| {
        (0..words(m)).map(move |w| (0..m).rev().map(|t| (w / words(t) % 8) as u8).collect())
    })
}
