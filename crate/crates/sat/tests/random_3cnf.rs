//! Verdict agreement between the CDCL solver and exhaustive enumeration.

use leakcover_sat::{parse_dimacs, Cnf, Lit, SolveResult, Solver, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_3cnf(rng: &mut ChaCha8Rng, n: usize, ratio: f64) -> Cnf {
    let m = (n as f64 * ratio).round() as usize;
    let clauses = (0..m)
        .map(|_| {
            (0..3)
                .map(|_| Var::from_index(rng.gen_range(0..n)).lit(rng.gen_bool(0.5)))
                .collect()
        })
        .collect();
    Cnf {
        num_vars: n,
        clauses,
    }
}

fn satisfies(cnf: &Cnf, s: &Solver) -> bool {
    cnf.clauses
        .iter()
        .all(|c| c.iter().any(|&l| s.model_value(l) == Some(true)))
}

#[test]
fn two_hundred_instances_at_ratio_four_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..200 {
        let n = 8 + i % 13; // 8..=20 variables
        let cnf = random_3cnf(&mut rng, n, 4.0);
        let expected = cnf.brute_force().is_some();
        let mut s = Solver::from_cnf(&cnf);
        let got = s.solve(&[]);
        assert_ne!(got, SolveResult::Unknown);
        assert_eq!(got == SolveResult::Sat, expected, "instance {i}:\n{}", cnf.to_dimacs());
        if expected {
            assert!(satisfies(&cnf, &s));
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    // ratio 4.0 is near the phase transition, both outcomes must be exercised
    assert!(sat > 20 && unsat > 20, "sat={sat} unsat={unsat}");
}

#[test]
fn incremental_assumptions_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = 12;
        let cnf = random_3cnf(&mut rng, n, 3.0);
        let mut s = Solver::from_cnf(&cnf);
        for _ in 0..10 {
            let assumptions: Vec<Lit> = (0..3)
                .map(|_| Var::from_index(rng.gen_range(0..n)).lit(rng.gen_bool(0.5)))
                .collect();
            let mut with_units = cnf.clone();
            with_units
                .clauses
                .extend(assumptions.iter().map(|&a| vec![a]));
            let expected = with_units.brute_force().is_some();
            assert_eq!(s.solve(&assumptions) == SolveResult::Sat, expected);
        }
    }
}

#[test]
fn dimacs_dump_is_equisatisfiable() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cnf = random_3cnf(&mut rng, 16, 4.2);
    let s = Solver::from_cnf(&cnf);
    let dumped = parse_dimacs(&s.to_cnf().to_dimacs()).unwrap();
    assert_eq!(dumped, cnf);
}

proptest! {
    #[test]
    fn solver_agrees_with_enumeration(
        clauses in prop::collection::vec(
            prop::collection::vec((0usize..10, any::<bool>()), 1..4), 0..45)
    ) {
        let cnf = Cnf {
            num_vars: 10,
            clauses: clauses
                .iter()
                .map(|c| c.iter().map(|&(v, p)| Var::from_index(v).lit(p)).collect())
                .collect(),
        };
        let mut s = Solver::from_cnf(&cnf);
        let got = s.solve(&[]);
        prop_assert_eq!(got == SolveResult::Sat, cnf.brute_force().is_some());
        if got == SolveResult::Sat {
            prop_assert!(satisfies(&cnf, &s));
        }
    }
}
