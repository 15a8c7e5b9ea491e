mod common;

use leakcover::fixtures;
use leakcover::hdl::{elaborate, parse_rtl, FlatNetlist, SignalKind, Simulator};
use leakcover::ifa::{enumerate_paths, EdgeGraph, LabelConfig, LeakagePath, Limits};
use leakcover::property::{
    active_condition, alive_condition, emit_file, emit_psl, parse_psl, parse_psl_file, path_property, split_blocks,
    CondKind, Origin, PropKind, Property, PslError, TemporalSeq,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::circuits::{random_circuit, random_seq, Sig};

fn blocks_path() -> (FlatNetlist, LeakagePath) {
    let n = elaborate(&parse_rtl(fixtures::BLOCKS).unwrap()).unwrap();
    let labels = LabelConfig::from_toml(fixtures::BLOCKS_LABELS).unwrap().resolve(&n).unwrap();
    let mut set = enumerate_paths(&n, &EdgeGraph::build(&n), &labels, Limits::default());
    assert_eq!(set.paths.len(), 1);
    (n, set.paths.remove(0))
}

#[test]
fn blocks_fixture_splits_at_registers() {
    let (n, path) = blocks_path();
    let blocks = split_blocks(&path);
    let names: Vec<Vec<&str>> = blocks
        .iter()
        .map(|b| b.edges.iter().map(|e| n.name(e.to.signal)).collect())
        .collect();
    assert_eq!(names, [vec!["s3"], vec!["s4", "s5", "s6"], vec!["s7", "s8"]]);
    let terms: Vec<Option<&str>> = blocks.iter().map(|b| b.terminator.map(|t| n.name(t.signal))).collect();
    assert_eq!(terms, [Some("s3"), Some("s6"), None]);
    let p = path_property(&n, &path);
    assert_eq!(p.name, format!("cover_{}", path.id));
    assert_eq!(p.origin, Origin::Path(path.id.clone()));
    assert_eq!(p.kind, PropKind::Cover);
    assert!(p.frozen.is_empty());
    let kinds: Vec<CondKind> = p.body.atoms().iter().map(|a| a.kind).collect();
    use CondKind::{Active, Alive};
    assert_eq!(kinds, [Active, Alive, Active, Active, Active, Alive, Active]);
}

/// Active conditions imply the edge forwards its source; alive conditions
/// imply the register keeps its value.
#[test]
fn conditions_agree_with_simulation() {
    let (n, path) = blocks_path();
    let id = |s: &str| n.lookup(s).unwrap();
    let inputs = n.free_inputs();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sim = Simulator::new(&n);
    let (mut forwarded, mut held) = (0, 0);
    for _ in 0..2000 {
        let drive: Vec<_> = inputs.iter().map(|&i| (i, rng.gen::<u64>())).collect();
        sim.apply(&drive);
        let before: Vec<u64> = n.signals.iter().map(|s| if s.kind == SignalKind::Memory { 0 } else { sim.value(n.lookup(&s.name).unwrap()) }).collect();
        let active: Vec<bool> = path.edges.iter().map(|e| active_condition(e).expr.eval(&sim) != 0).collect();
        let alive3 = alive_condition(&n, id("s3")).expr.eval(&sim) != 0;
        let alive6 = alive_condition(&n, id("s6")).expr.eval(&sim) != 0;
        assert_eq!(alive3, sim.value(id("en3")) == 0);
        assert_eq!(alive6, sim.value(id("en6")) == 0);
        for (e, &on) in path.edges.iter().zip(&active) {
            if on && !e.sequential {
                assert_eq!(sim.value(e.to.signal), sim.value(e.from.signal));
                forwarded += 1;
            }
        }
        sim.tick();
        sim.apply(&drive);
        for (e, &on) in path.edges.iter().zip(&active) {
            if on && e.sequential {
                assert_eq!(sim.value(e.to.signal), before[e.from.signal.index()]);
                forwarded += 1;
            }
        }
        for (alive, reg) in [(alive3, "s3"), (alive6, "s6")] {
            if alive {
                assert_eq!(sim.value(id(reg)), before[id(reg).index()]);
                held += 1;
            }
        }
    }
    assert!(forwarded > 1000 && held > 1000, "{forwarded} {held}");
}

#[test]
fn minirv_properties_freeze_one_address_per_memory_hop() {
    let inputs = common::inputs(1, None);
    let n = &inputs.netlist;
    let set = enumerate_paths(n, &EdgeGraph::build(n), &inputs.labels, Limits::default());
    for path in &set.paths {
        let blocks = split_blocks(path);
        let hops = blocks[..blocks.len() - 1]
            .iter()
            .filter(|b| n.signal(b.terminator.unwrap().signal).kind == SignalKind::Memory)
            .count();
        let p = path_property(n, path);
        assert_eq!(p.frozen.len(), hops, "{}", path.id);
        for f in &p.frozen {
            assert_eq!(f.max, 7);
        }
        let again = parse_psl(n, &emit_psl(n, &p)).unwrap();
        assert_eq!(again, p);
    }
}

#[test]
fn precedence_and_grouping() {
    let (n, _) = blocks_path();
    let p = parse_psl(&n, "x: cover { (en3) ; en4 : en5[*] ; {en6 ; en8}[*] };").unwrap();
    let atom = |s: &str| TemporalSeq::atom(parse_psl(&n, &format!("cover {{ {s} }};")).unwrap().body.atoms()[0].expr.clone(), CondKind::Active);
    let want = TemporalSeq::concat(
        TemporalSeq::concat(atom("en3"), TemporalSeq::fuse(atom("en4"), TemporalSeq::rep(atom("en5")))),
        TemporalSeq::rep(TemporalSeq::concat(atom("en6"), atom("en8"))),
    );
    assert_eq!(p.body, want);
    assert_eq!(p.origin, Origin::Path("x".into()));
}

#[test]
fn malformed_text_is_rejected() {
    let (n, _) = blocks_path();
    assert!(matches!(parse_psl(&n, "cover { en3 ; };"), Err(PslError::Syntax(_))));
    assert!(matches!(parse_psl(&n, "cover { nosuch };"), Err(PslError::Syntax(_))));
    assert!(matches!(parse_psl(&n, "cover { en3 }"), Err(PslError::Syntax(_))));
    assert!(matches!(parse_psl(&n, "cover { en3 }; cover { en4 };"), Err(PslError::Count(2))));
    assert!(matches!(parse_psl(&n, ""), Err(PslError::Count(0))));
}

#[test]
fn random_properties_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut total = 0;
    for c in 0..25 {
        let circuit = random_circuit(&mut rng, c);
        let n = &circuit.netlist;
        let sigs: Vec<Sig> = n
            .signals
            .iter()
            .filter(|s| s.kind != SignalKind::Memory && s.width <= 3 && !s.name.contains("clk"))
            .map(|s| Sig { name: s.name.clone(), width: s.width })
            .collect();
        let mut props = Vec::new();
        for i in 0..20 {
            let nodes = rng.gen_range(1..=9);
            let body = random_seq(&mut rng, n, &sigs, nodes);
            let p = Property {
                name: format!("cover_Q{i}"),
                kind: PropKind::Cover,
                origin: Origin::Path(format!("Q{i}")),
                body,
                frozen: Vec::new(),
            };
            let text = emit_psl(n, &p);
            let back = parse_psl(n, &text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(back, p, "{text}");
            props.push(p);
            total += 1;
        }
        props.push(Property::assume("assume_x", "used", circuit.properties[0].body.atoms()[0].expr.clone()));
        let file = emit_file(n, &props);
        assert_eq!(parse_psl_file(n, &file).unwrap(), props);
    }
    assert_eq!(total, 500);
}
