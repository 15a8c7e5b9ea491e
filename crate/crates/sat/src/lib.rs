//! A small incremental CDCL SAT solver.
//!
//! The solver follows the MiniSat design: two watched literals with blockers,
//! VSIDS branching with phase saving, first-UIP learning with recursive clause
//! minimization, Luby restarts and LBD-guided learnt clause reduction. Solving
//! under assumptions is supported so that callers can grow an unrolled problem
//! and re-query it without rebuilding the clause database.

mod dimacs;
mod heap;
mod solver;

pub use dimacs::{parse_dimacs, Cnf, DimacsError};
pub use solver::{SolveResult, Solver, Stats};

use std::fmt;
use std::ops::Not;

/// A propositional variable, numbered from zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    pub fn from_index(index: usize) -> Self {
        Var(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A literal: a variable or its negation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        Lit(var.0 << 1 | u32::from(!positive))
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }

    /// Converts a non-zero DIMACS integer (1-based, sign = polarity).
    pub fn from_dimacs(value: i64) -> Self {
        assert!(value != 0, "DIMACS literal 0 is the clause terminator");
        let var = Var((value.unsigned_abs() - 1) as u32);
        Lit::new(var, value > 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var().0) + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}
