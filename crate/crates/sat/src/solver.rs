use crate::heap::VarHeap;
use crate::{Cnf, Lit, Var};

const VAL_UNDEF: u8 = 0;
const VAL_TRUE: u8 = 1;
const VAL_FALSE: u8 = 2;

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const RESTART_BASE: u64 = 100;

/// Outcome of one `solve` call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    /// The conflict budget ran out before a verdict was reached.
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    removed: bool,
    lbd: u32,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

enum SearchOutcome {
    Sat,
    Unsat,
    Restart,
    Budget,
}

/// Incremental CDCL solver.
pub struct Solver {
    clauses: Vec<Clause>,
    originals: Vec<Vec<Lit>>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,

    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    seen: Vec<bool>,
    heap: VarHeap,

    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,

    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    ok: bool,
    model: Vec<bool>,
    conflict_budget: Option<u64>,
    stats: Stats,

    analyze_stack: Vec<Lit>,
    analyze_clear: Vec<Var>,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            originals: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            seen: Vec::new(),
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 0.0,
            ok: true,
            model: Vec::new(),
            conflict_budget: None,
            stats: Stats::default(),
            analyze_stack: Vec::new(),
            analyze_clear: Vec::new(),
        }
    }

    /// Builds a solver holding all clauses of `cnf`.
    pub fn from_cnf(cnf: &Cnf) -> Self {
        let mut s = Solver::new();
        s.reserve_vars(cnf.num_vars);
        for c in &cnf.clauses {
            s.add_clause(c);
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Limits the number of conflicts per `solve` call; `None` removes the limit.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var::from_index(self.assigns.len());
        self.assigns.push(VAL_UNDEF);
        self.level.push(0);
        self.reason.push(None);
        self.polarity.push(false);
        self.activity.push(0.0);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.grow(self.assigns.len());
        self.heap.insert(v.index(), &self.activity);
        v
    }

    /// Makes sure variables `0..n` exist.
    pub fn reserve_vars(&mut self, n: usize) {
        while self.num_vars() < n {
            self.new_var();
        }
    }

    /// Adds a permanent clause. Returns `false` once the formula is known
    /// to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if let Some(max) = lits.iter().map(|l| l.var().index()).max() {
            self.reserve_vars(max + 1);
        }
        self.originals.push(lits.to_vec());
        if !self.ok {
            return false;
        }
        self.cancel_until(0);

        let mut ls: Vec<Lit> = lits.to_vec();
        ls.sort_unstable();
        ls.dedup();
        let mut out = Vec::with_capacity(ls.len());
        for (i, &l) in ls.iter().enumerate() {
            if i + 1 < ls.len() && ls[i + 1] == !l {
                return true; // tautology
            }
            match self.value(l) {
                VAL_TRUE => return true,
                VAL_FALSE => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(out, false, 0);
                true
            }
        }
    }

    /// Solves under the given assumption literals.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.stats.solves += 1;
        self.model.clear();
        if !self.ok {
            return SolveResult::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().index()).max() {
            self.reserve_vars(max + 1);
        }
        self.max_learnts = (self.originals.len() as f64 / 3.0).max(2000.0);
        let start_conflicts = self.stats.conflicts;
        let mut restart = 0u32;
        let result = loop {
            let budget = luby(2.0, restart) as u64 * RESTART_BASE;
            match self.search(budget, assumptions, start_conflicts) {
                SearchOutcome::Sat => break SolveResult::Sat,
                SearchOutcome::Unsat => break SolveResult::Unsat,
                SearchOutcome::Budget => break SolveResult::Unknown,
                SearchOutcome::Restart => {
                    restart += 1;
                    self.stats.restarts += 1;
                }
            }
        };
        if result == SolveResult::Sat {
            self.model = self.assigns.iter().map(|&a| a == VAL_TRUE).collect();
        }
        self.cancel_until(0);
        result
    }

    /// Value of `lit` in the last satisfying assignment.
    pub fn model_value(&self, lit: Lit) -> Option<bool> {
        self.model
            .get(lit.var().index())
            .map(|&b| b == lit.is_positive())
    }

    /// The clauses as they were added, for exchange with other solvers.
    pub fn to_cnf(&self) -> Cnf {
        Cnf {
            num_vars: self.num_vars(),
            clauses: self.originals.clone(),
        }
    }

    /// The clause database plus `assumptions` as unit clauses.
    pub fn to_cnf_with_assumptions(&self, assumptions: &[Lit]) -> Cnf {
        let mut cnf = self.to_cnf();
        cnf.clauses.extend(assumptions.iter().map(|&a| vec![a]));
        cnf
    }

    // ------------------------------------------------------------------

    fn value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var().index()];
        if a == VAL_UNDEF || l.is_positive() {
            a
        } else {
            a ^ 3
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], VAL_UNDEF);
        self.assigns[v] = if l.is_positive() { VAL_TRUE } else { VAL_FALSE };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool, lbd: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].index()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].index()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            removed: false,
            lbd,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.assigns[v] = VAL_UNDEF;
            self.reason[v] = None;
            self.polarity[v] = l.is_positive();
            if !self.heap.contains(v) {
                self.heap.insert(v, &self.activity);
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = lim;
    }

    /// Unit propagation; returns a conflicting clause if one is found.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == VAL_TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].removed {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.value(first) == VAL_TRUE {
                    ws[j] = Watcher {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != VAL_FALSE {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l.index()].push(Watcher {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                j += 1;
                if self.value(first) == VAL_FALSE {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.index()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize, u32) {
        let mut learnt: Vec<Lit> = vec![Lit::new(Var::from_index(0), true)];
        let mut path_count = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;

        loop {
            self.bump_clause(confl as usize);
            let start = usize::from(p.is_some());
            let n = self.clauses[confl as usize].lits.len();
            for k in start..n {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path_count += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            self.seen[pl.var().index()] = false;
            path_count -= 1;
            if path_count == 0 {
                break;
            }
            confl = self.reason[pl.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict analysis visited a literal");

        // recursive minimization
        self.analyze_clear.clear();
        for &l in &learnt[1..] {
            self.analyze_clear.push(l.var());
        }
        let abstract_levels = learnt[1..]
            .iter()
            .fold(0u64, |acc, l| acc | self.abstract_level(l.var()));
        let mut keep = vec![learnt[0]];
        for &l in &learnt[1..] {
            let redundant = self.reason[l.var().index()].is_some()
                && self.lit_redundant(l, abstract_levels);
            if !redundant {
                keep.push(l);
            }
        }
        let learnt = keep;
        for v in std::mem::take(&mut self.analyze_clear) {
            self.seen[v.index()] = false;
        }

        let mut learnt = learnt;
        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().index()] as usize
        };
        let mut levels: Vec<u32> = learnt
            .iter()
            .map(|l| self.level[l.var().index()])
            .collect();
        levels.sort_unstable();
        levels.dedup();
        (learnt, bt, levels.len() as u32)
    }

    fn abstract_level(&self, v: Var) -> u64 {
        1u64 << (self.level[v.index()] & 63)
    }

    fn lit_redundant(&mut self, p: Lit, abstract_levels: u64) -> bool {
        self.analyze_stack.clear();
        self.analyze_stack.push(p);
        let top = self.analyze_clear.len();
        while let Some(q) = self.analyze_stack.pop() {
            let cref = self.reason[q.var().index()].expect("caller checked reason") as usize;
            let n = self.clauses[cref].lits.len();
            for k in 1..n {
                let l = self.clauses[cref].lits[k];
                let v = l.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    if self.reason[v].is_some()
                        && (self.abstract_level(l.var()) & abstract_levels) != 0
                    {
                        self.seen[v] = true;
                        self.analyze_stack.push(l);
                        self.analyze_clear.push(l.var());
                    } else {
                        for var in self.analyze_clear.drain(top..) {
                            self.seen[var.index()] = false;
                        }
                        return false;
                    }
                }
            }
        }
        true
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let l0 = c.lits[0];
        self.reason[l0.var().index()] == Some(cref) && self.value(l0) == VAL_TRUE
    }

    fn reduce_db(&mut self) {
        let mut learnts = std::mem::take(&mut self.learnts);
        learnts.sort_by(|&a, &b| {
            let ca = &self.clauses[a as usize];
            let cb = &self.clauses[b as usize];
            cb.lbd
                .cmp(&ca.lbd)
                .then(ca.activity.partial_cmp(&cb.activity).unwrap_or(std::cmp::Ordering::Equal))
        });
        let half = learnts.len() / 2;
        let mut kept = Vec::with_capacity(learnts.len());
        for (i, cref) in learnts.into_iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if i < half && c.lbd > 2 && c.lits.len() > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.removed = true;
                c.lits = Vec::new();
            } else {
                kept.push(cref);
            }
        }
        self.learnts = kept;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        loop {
            let v = self.heap.pop(&self.activity)?;
            if self.assigns[v] == VAL_UNDEF {
                return Some(Var::from_index(v).lit(self.polarity[v]));
            }
        }
    }

    fn search(&mut self, restart_budget: u64, assumptions: &[Lit], start: u64) -> SearchOutcome {
        let mut conflicts_here = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts_here += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SearchOutcome::Unsat;
                }
                let (learnt, bt, lbd) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true, lbd);
                    self.bump_clause(cref as usize);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
                continue;
            }

            if let Some(budget) = self.conflict_budget {
                if self.stats.conflicts - start >= budget {
                    return SearchOutcome::Budget;
                }
            }
            if conflicts_here >= restart_budget {
                self.cancel_until(0);
                return SearchOutcome::Restart;
            }
            if self.learnts.len() as f64 >= self.max_learnts + self.trail.len() as f64 {
                self.reduce_db();
                self.max_learnts *= 1.1;
            }

            let mut next = None;
            while self.decision_level() < assumptions.len() {
                let a = assumptions[self.decision_level()];
                match self.value(a) {
                    VAL_TRUE => self.trail_lim.push(self.trail.len()),
                    VAL_FALSE => return SearchOutcome::Unsat,
                    _ => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let next = match next {
                Some(l) => l,
                None => match self.pick_branch() {
                    Some(l) => {
                        self.stats.decisions += 1;
                        l
                    }
                    None => return SearchOutcome::Sat,
                },
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, None);
        }
    }
}

/// Element `i` of the Luby sequence scaled by powers of `y`.
fn luby(y: f64, mut x: u32) -> f64 {
    let mut size = 1u32;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(x: i64) -> Lit {
        Lit::from_dimacs(x)
    }

    #[test]
    fn single_positive_clause_with_negated_unit() {
        let mut s = Solver::new();
        s.add_clause(&[lit(1), lit(2)]);
        s.add_clause(&[lit(-1)]);
        assert_eq!(s.solve(&[]), SolveResult::Sat);
        assert_eq!(s.model_value(lit(2)), Some(true));
        assert_eq!(s.model_value(lit(1)), Some(false));
    }

    #[test]
    fn contradictory_units() {
        let mut s = Solver::new();
        s.add_clause(&[lit(1)]);
        s.add_clause(&[lit(-1)]);
        assert_eq!(s.solve(&[]), SolveResult::Unsat);
    }

    #[test]
    fn assumptions_do_not_poison_the_database() {
        let mut s = Solver::new();
        s.add_clause(&[lit(1), lit(2)]);
        assert_eq!(s.solve(&[lit(-1), lit(-2)]), SolveResult::Unsat);
        assert_eq!(s.solve(&[lit(-1)]), SolveResult::Sat);
        assert_eq!(s.model_value(lit(2)), Some(true));
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<f64> = (0..7).map(|i| luby(2.0, i)).collect();
        assert_eq!(seq, vec![1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn pigeonhole_is_unsat_and_budget_reports_unknown() {
        // 6 pigeons, 5 holes
        let (p, h) = (6, 5);
        let var = |i: usize, j: usize| Var::from_index(i * h + j);
        let mut s = Solver::new();
        for i in 0..p {
            let c: Vec<Lit> = (0..h).map(|j| var(i, j).pos()).collect();
            s.add_clause(&c);
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    s.add_clause(&[var(a, j).neg(), var(b, j).neg()]);
                }
            }
        }
        let mut limited = Solver::from_cnf(&s.to_cnf());
        limited.set_conflict_budget(Some(3));
        assert_eq!(limited.solve(&[]), SolveResult::Unknown);
        assert_eq!(s.solve(&[]), SolveResult::Unsat);
    }
}
