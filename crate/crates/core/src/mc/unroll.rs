//! Time-frame expansion of a transition system into CNF.
//!
//! Nodes are encoded on demand, so each query only pays for its cone of
//! influence.

use leakcover_sat::{Lit, SolveResult, Solver};

use super::aig::{AigLit, Node};
use super::ts::{Init, TransitionSystem, VarRole};

const NONE: u32 = u32::MAX;

pub struct Unroller<'t> {
    ts: &'t TransitionSystem,
    pub solver: Solver,
    /// Per frame: SAT literal code of each AIG node, or `NONE`.
    frames: Vec<Vec<u32>>,
    true_lit: Lit,
    initialized: bool,
    queries: u64,
}

fn code(l: Lit) -> u32 {
    let d = l.to_dimacs();
    if d > 0 {
        (d as u32) << 1
    } else {
        ((-d) as u32) << 1 | 1
    }
}

fn decode(c: u32) -> Lit {
    let v = i64::from(c >> 1);
    Lit::from_dimacs(if c & 1 == 1 { -v } else { v })
}

impl<'t> Unroller<'t> {
    /// With `initialized`, frame 0 starts in an initial state; otherwise
    /// frame 0 is an arbitrary state.
    pub fn new(ts: &'t TransitionSystem, initialized: bool) -> Self {
        let mut solver = Solver::new();
        let t = solver.new_var().pos();
        solver.add_clause(&[t]);
        Unroller {
            ts,
            solver,
            frames: Vec::new(),
            true_lit: t,
            initialized,
            queries: 0,
        }
    }

    pub fn ts(&self) -> &'t TransitionSystem {
        self.ts
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    fn ensure(&mut self, frame: usize) {
        while self.frames.len() <= frame {
            self.frames.push(vec![NONE; self.ts.aig.len()]);
        }
    }

    fn mapped(&self, frame: usize, node: usize) -> Option<Lit> {
        let c = self.frames[frame][node];
        (c != NONE).then(|| decode(c))
    }

    /// SAT literal for `l` in `frame`.
    pub fn lit(&mut self, frame: usize, l: AigLit) -> Lit {
        self.ensure(frame);
        let n = self.node_lit(frame, l.node());
        if l.is_complemented() {
            !n
        } else {
            n
        }
    }

    fn node_lit(&mut self, frame: usize, node: usize) -> Lit {
        if let Some(l) = self.mapped(frame, node) {
            return l;
        }
        let ts = self.ts;
        let mut stack = vec![(frame, node)];
        while let Some(&(f, n)) = stack.last() {
            if self.mapped(f, n).is_some() {
                stack.pop();
                continue;
            }
            let lit = match ts.aig.node(n) {
                Node::Const => Some(!self.true_lit),
                Node::Var(i) => match ts.roles[i as usize] {
                    VarRole::Input(_) => Some(self.solver.new_var().pos()),
                    VarRole::Latch(l) => {
                        let latch = ts.latches[l];
                        if f == 0 {
                            let v = self.solver.new_var().pos();
                            if self.initialized && latch.init == Init::Zero {
                                self.solver.add_clause(&[!v]);
                            }
                            Some(v)
                        } else {
                            match self.mapped(f - 1, latch.next.node()) {
                                Some(p) => Some(if latch.next.is_complemented() { !p } else { p }),
                                None => {
                                    stack.push((f - 1, latch.next.node()));
                                    None
                                }
                            }
                        }
                    }
                },
                Node::And(a, b) => {
                    let la = self.mapped(f, a.node());
                    let lb = self.mapped(f, b.node());
                    match (la, lb) {
                        (Some(x), Some(y)) => {
                            let x = if a.is_complemented() { !x } else { x };
                            let y = if b.is_complemented() { !y } else { y };
                            let v = self.solver.new_var().pos();
                            self.solver.add_clause(&[!v, x]);
                            self.solver.add_clause(&[!v, y]);
                            self.solver.add_clause(&[v, !x, !y]);
                            Some(v)
                        }
                        _ => {
                            if la.is_none() {
                                stack.push((f, a.node()));
                            }
                            if lb.is_none() {
                                stack.push((f, b.node()));
                            }
                            None
                        }
                    }
                }
            };
            if let Some(l) = lit {
                self.frames[f][n] = code(l);
                stack.pop();
            }
        }
        self.mapped(frame, node).expect("encoded")
    }

    /// Asserts every constraint of the system in `frame`.
    pub fn assert_constraints(&mut self, frame: usize) {
        for i in 0..self.ts.constraints.len() {
            let c = self.lit(frame, self.ts.constraints[i]);
            self.solver.add_clause(&[c]);
        }
    }

    pub fn assert(&mut self, frame: usize, l: AigLit) {
        let c = self.lit(frame, l);
        self.solver.add_clause(&[c]);
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.queries += 1;
        self.solver.solve(assumptions)
    }

    /// Model value of an already encoded literal; unencoded ones read as 0.
    pub fn value(&self, frame: usize, l: AigLit) -> bool {
        let v = match self.frames.get(frame).and_then(|_| self.mapped(frame, l.node())) {
            Some(lit) => self.solver.model_value(lit).unwrap_or(false),
            None => false,
        };
        v ^ l.is_complemented()
    }
}
