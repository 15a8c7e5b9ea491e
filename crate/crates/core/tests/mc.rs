mod common;

use leakcover::hdl::{elaborate, parse_rtl, Expr};
use leakcover::mc::{
    bmc_cnf, check_cover, compile_monitor, compile_ts, explicit_cover, matches_word, product, CheckOptions,
    ExplicitLimits, ReplayError, Verdict, Witness,
};
use leakcover::property::{parse_psl, Property, TemporalSeq};
use leakcover_sat::{parse_dimacs, SolveResult, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::sere::{all_words, for_each_sequence, language, matches, Atoms, Letter};

fn letters(atoms: &Atoms, s: &TemporalSeq, w: &[u8]) -> Vec<Vec<bool>> {
    let idx: Vec<usize> = s.atoms().iter().map(|a| atoms.index(&a.expr)).collect();
    w.iter().map(|&l| idx.iter().map(|&k| l >> k & 1 == 1).collect()).collect()
}

/// The split-based matcher and the bitset language agree, so either can
/// stand in as the reference.
#[test]
fn reference_semantics_are_consistent() {
    let atoms = Atoms::new();
    let mut n = 0;
    for_each_sequence(&atoms, 5, |s, lang| {
        assert_eq!(language(&atoms, s).0, lang.0);
        for w in all_words(4) {
            assert_eq!(matches(&atoms, s, &w), lang.contains(&w), "{s:?} {w:?}");
        }
        n += 1;
    });
    assert!(n > 100);
}

#[test]
fn derivative_matcher_agrees_with_reference() {
    let atoms = Atoms::new();
    for_each_sequence(&atoms, 5, |s, lang| {
        for w in all_words(4) {
            assert_eq!(matches_word(s, &letters(&atoms, s, &w)), lang.contains(&w), "{s:?} {w:?}");
        }
    });
}

/// Beyond the exhaustive length, the automaton still agrees with the
/// matcher on random long traces.
#[test]
fn monitor_agrees_with_matcher_on_long_traces() {
    let atoms = Atoms::new();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut seqs = Vec::new();
    for_each_sequence(&atoms, 6, |s, _| seqs.push(s.clone()));
    for _ in 0..3000 {
        let s = &seqs[rng.gen_range(0..seqs.len())];
        let nfa = compile_monitor(s);
        let len = rng.gen_range(7..14);
        // bias towards ones so long matches happen
        let w: Vec<u8> = (0..len).map(|_| (0..3).map(|k| u8::from(rng.gen_bool(0.7)) << k).sum()).collect();
        let trace: Vec<Letter> = w.iter().map(|&bits| Letter { ids: &atoms.ids, bits }).collect();
        assert_eq!(nfa.accepts(&trace), matches_word(s, &letters(&atoms, s, &w)), "{s:?} {w:?}");
    }
}

#[test]
fn random_circuits_agree_with_explicit_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1c);
    let opts = CheckOptions { max_k: 24, ..CheckOptions::default() };
    let (mut covered, mut proved) = (0, 0);
    for i in 0..12 {
        let c = common::circuits::random_circuit(&mut rng, i);
        let ts = compile_ts(&c.netlist, &c.assumptions).unwrap();
        for p in &c.properties {
            let r = check_cover(&c.netlist, &ts, p, &opts);
            let o = explicit_cover(&c.netlist, &c.assumptions, p, ExplicitLimits::default()).unwrap();
            match &r.verdict {
                Verdict::Covered { depth, witness } => {
                    assert!(o.covered, "{}\n{}", p.name, c.source);
                    assert_eq!(Some(*depth), o.depth, "{} shortest match", p.name);
                    assert_eq!(witness.len(), depth + 1);
                    witness.replay(&c.netlist, &c.assumptions, p).unwrap();
                    covered += 1;
                }
                Verdict::Uncoverable { .. } => {
                    assert!(!o.covered, "{}\n{}", p.name, c.source);
                    proved += 1;
                }
                Verdict::Unknown { .. } => {}
            }
        }
    }
    assert!(covered > 10 && proved > 5, "{covered} covered, {proved} proved");
}

fn counter() -> (leakcover::hdl::FlatNetlist, Property) {
    let src = "module cnt(input clk, input go, output [2:0] q);
        reg [2:0] c; always @(posedge clk) if (go) c <= c + 3'd1; assign q = c; endmodule";
    let n = elaborate(&parse_rtl(src).unwrap()).unwrap();
    let p = parse_psl(&n, "cover_P1: cover { (c == 3'd5) };").unwrap();
    (n, p)
}

#[test]
fn witness_table_round_trip_and_tamper() {
    let (n, p) = counter();
    let ts = compile_ts(&n, &[]).unwrap();
    let r = check_cover(&n, &ts, &p, &CheckOptions::default());
    let Verdict::Covered { depth, witness } = r.verdict else { panic!("{:?}", r.verdict) };
    assert_eq!(depth, 5);
    let back = Witness::from_table(&witness.to_table()).unwrap();
    assert_eq!(back, witness);
    back.replay(&n, &[], &p).unwrap();

    let mut short = witness.clone();
    short.cycles.pop();
    assert_eq!(short.replay(&n, &[], &p), Err(ReplayError::NoMatch));
    let go = n.lookup("go").unwrap();
    let never = Expr::signal(go, 1).not();
    assert!(matches!(witness.replay(&n, &[never.clone()], &p), Err(ReplayError::Assumption { index: 0, .. })));
    let mut renamed = witness.clone();
    renamed.signals = vec!["nope".into()];
    assert_eq!(renamed.replay(&n, &[], &p), Err(ReplayError::UnknownInput("nope".into())));
    assert!(Witness::from_table("cycle go\n0 1 2\n").is_err());

    // with `go` held low the counter never moves; induction proves it
    let ts = compile_ts(&n, &[never]).unwrap();
    assert!(check_cover(&n, &ts, &p, &CheckOptions::default()).verdict.is_uncoverable());
}

/// The exported formula is satisfiable exactly from the shortest witness
/// depth on, and survives a DIMACS text round trip.
#[test]
fn dimacs_export_matches_bmc() {
    let (n, p) = counter();
    let base = compile_ts(&n, &[]).unwrap();
    let (ts, _) = product(&base, &p);
    for depth in 0..8 {
        let cnf = bmc_cnf(&ts, depth);
        let text = cnf.to_dimacs();
        let again = parse_dimacs(&text).unwrap();
        assert_eq!(again.clauses.len(), cnf.clauses.len());
        let mut s = Solver::from_cnf(&again);
        let want = if depth >= 5 { SolveResult::Sat } else { SolveResult::Unsat };
        assert_eq!(s.solve(&[]), want, "depth {depth}");
    }
}
