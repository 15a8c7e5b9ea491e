//! And-inverter graph with structural hashing.

use std::collections::HashMap;

/// Node index shifted left once, low bit = complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AigLit(u32);

impl AigLit {
    pub const FALSE: AigLit = AigLit(0);
    pub const TRUE: AigLit = AigLit(1);

    pub fn node(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_const(self) -> bool {
        self.node() == 0
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl std::ops::Not for AigLit {
    type Output = AigLit;
    fn not(self) -> AigLit {
        AigLit(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Const,
    /// Free variable: a state bit or an input bit, by variable index.
    Var(u32),
    And(AigLit, AigLit),
}

#[derive(Clone, Debug)]
pub struct Aig {
    nodes: Vec<Node>,
    strash: HashMap<(AigLit, AigLit), AigLit>,
    vars: Vec<AigLit>,
}

impl Default for Aig {
    fn default() -> Self {
        Self::new()
    }
}

impl Aig {
    pub fn new() -> Self {
        Aig {
            nodes: vec![Node::Const],
            strash: HashMap::new(),
            vars: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn node(&self, i: usize) -> Node {
        self.nodes[i]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var(&self, index: u32) -> AigLit {
        self.vars[index as usize]
    }

    pub fn new_var(&mut self) -> AigLit {
        let lit = AigLit((self.nodes.len() as u32) << 1);
        self.nodes.push(Node::Var(self.vars.len() as u32));
        self.vars.push(lit);
        lit
    }

    pub fn constant(b: bool) -> AigLit {
        if b {
            AigLit::TRUE
        } else {
            AigLit::FALSE
        }
    }

    pub fn and(&mut self, a: AigLit, b: AigLit) -> AigLit {
        if a == AigLit::FALSE || b == AigLit::FALSE || a == !b {
            return AigLit::FALSE;
        }
        if a == AigLit::TRUE || a == b {
            return b;
        }
        if b == AigLit::TRUE {
            return a;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&l) = self.strash.get(&key) {
            return l;
        }
        let lit = AigLit((self.nodes.len() as u32) << 1);
        self.nodes.push(Node::And(key.0, key.1));
        self.strash.insert(key, lit);
        lit
    }

    pub fn or(&mut self, a: AigLit, b: AigLit) -> AigLit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: AigLit, b: AigLit) -> AigLit {
        let x = self.and(a, !b);
        let y = self.and(!a, b);
        self.or(x, y)
    }

    pub fn xnor(&mut self, a: AigLit, b: AigLit) -> AigLit {
        !self.xor(a, b)
    }

    pub fn mux(&mut self, c: AigLit, t: AigLit, e: AigLit) -> AigLit {
        if t == e {
            return t;
        }
        let x = self.and(c, t);
        let y = self.and(!c, e);
        self.or(x, y)
    }

    pub fn and_all(&mut self, lits: impl IntoIterator<Item = AigLit>) -> AigLit {
        lits.into_iter().fold(AigLit::TRUE, |acc, l| self.and(acc, l))
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = AigLit>) -> AigLit {
        lits.into_iter().fold(AigLit::FALSE, |acc, l| self.or(acc, l))
    }

    /// Evaluates with the given variable values.
    pub fn eval(&self, lit: AigLit, var_value: &dyn Fn(u32) -> bool, cache: &mut Vec<Option<bool>>) -> bool {
        cache.resize(self.nodes.len(), None);
        let v = self.eval_node(lit.node(), var_value, cache);
        v ^ lit.is_complemented()
    }

    fn eval_node(&self, n: usize, var_value: &dyn Fn(u32) -> bool, cache: &mut Vec<Option<bool>>) -> bool {
        if let Some(v) = cache[n] {
            return v;
        }
        // explicit stack: AIGs for wide arithmetic get deep
        let mut stack = vec![n];
        while let Some(&top) = stack.last() {
            if cache[top].is_some() {
                stack.pop();
                continue;
            }
            match self.nodes[top] {
                Node::Const => {
                    cache[top] = Some(false);
                    stack.pop();
                }
                Node::Var(i) => {
                    cache[top] = Some(var_value(i));
                    stack.pop();
                }
                Node::And(a, b) => {
                    let (ca, cb) = (cache[a.node()], cache[b.node()]);
                    match (ca, cb) {
                        (Some(x), Some(y)) => {
                            cache[top] = Some((x ^ a.is_complemented()) && (y ^ b.is_complemented()));
                            stack.pop();
                        }
                        _ => {
                            if ca.is_none() {
                                stack.push(a.node());
                            }
                            if cb.is_none() {
                                stack.push(b.node());
                            }
                        }
                    }
                }
            }
        }
        cache[n].expect("evaluated")
    }
}
