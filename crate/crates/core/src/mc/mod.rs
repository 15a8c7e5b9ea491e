//! SAT-based cover checking.
//!
//! A design and its invariant assumptions are compiled to a bit-level
//! [`TransitionSystem`]; a cover sequence becomes an automaton whose product
//! with the design raises `bad` when a match completes. Bounded model
//! checking looks for witnesses and k-induction proves that none exist.

pub mod aig;
pub mod blast;
mod check;
mod monitor;
pub mod oracle;
mod ts;
mod unroll;
mod witness;

pub use check::{check_cover, check_ts, coi_latches, product, CheckOptions, CheckReport, Method, Verdict};
pub use monitor::{attach_monitor, compile_monitor, Nfa, Transition};
pub use oracle::{explicit_cover, matches_word, ExplicitError, ExplicitLimits, ExplicitResult, Matcher};
pub use ts::{compile_ts, Init, Latch, TransitionSystem, TsError, VarRole};
pub use unroll::Unroller;
pub use witness::{ReplayError, Witness};

use leakcover_sat::Cnf;

/// CNF of "a match completes in cycle `depth`" for DIMACS export.
pub fn bmc_cnf(ts: &TransitionSystem, depth: usize) -> Cnf {
    let mut u = Unroller::new(ts, true);
    for f in 0..=depth {
        u.assert_constraints(f);
    }
    let b = u.lit(depth, ts.bad);
    u.solver.to_cnf_with_assumptions(&[b])
}
