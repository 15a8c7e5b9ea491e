mod common;

use leakcover::fixtures;
use leakcover::hdl::{elaborate, parse_rtl, pretty_print, FlatNetlist, HdlError, SignalKind, Simulator};
use leakcover::software::{encode, Op};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::iss::{Bus, Iss};

fn netlist(src: &str) -> FlatNetlist {
    elaborate(&parse_rtl(src).unwrap()).unwrap()
}

#[test]
fn fixtures_survive_pretty_print_round_trip() {
    for src in [fixtures::MINIRV, fixtures::CALLSTACK, fixtures::MUX, fixtures::BLOCKS] {
        let tree = parse_rtl(src).unwrap();
        let printed = pretty_print(&tree);
        let again = parse_rtl(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(tree, again);
        assert_eq!(printed, pretty_print(&again));
    }
}

#[test]
fn mux_selects_secret_or_public() {
    let n = netlist(fixtures::MUX);
    let [sel, secret, public, out] = ["sel", "secret", "pub", "out"].map(|s| n.lookup(s).unwrap());
    assert_eq!(n.signal(out).kind, SignalKind::Output);
    let mut sim = Simulator::new(&n);
    sim.apply(&[(sel, 1), (secret, 0xa5), (public, 0x3c)]);
    assert_eq!(sim.value(out), 0xa5);
    sim.apply(&[(sel, 0)]);
    assert_eq!(sim.value(out), 0x3c);
}

#[test]
fn nested_instances_are_flattened_with_paths() {
    let src = "
        module leaf(input [3:0] a, output [3:0] y); wire [3:0] t = a + 4'd1; assign y = t; endmodule
        module mid(input [3:0] a, output [3:0] y); leaf u2(.a(a), .y(y)); endmodule
        module top(input [3:0] a, output [3:0] y); mid u1(.a(a), .y(y)); endmodule";
    let n = netlist(src);
    assert_eq!(n.top, "top");
    for name in ["a", "y", "u1.a", "u1.y", "u1.u2.a", "u1.u2.t", "u1.u2.y"] {
        assert!(n.lookup(name).is_some(), "missing {name}");
    }
    let mut sim = Simulator::new(&n);
    sim.apply(&[(n.lookup("a").unwrap(), 15)]);
    assert_eq!(sim.value(n.lookup("y").unwrap()), 0);
}

#[test]
fn errors_name_the_problem() {
    match parse_rtl("module m(input a) endmodule") {
        Err(HdlError::Syntax { span, expected, .. }) => {
            assert_eq!(span.line, 1);
            assert!(expected.iter().any(|e| e.contains(';')), "{expected:?}");
        }
        other => panic!("{other:?}"),
    }
    match parse_rtl("module m(input a); initial begin end endmodule") {
        Err(HdlError::Unsupported { construct, .. }) => assert!(construct.contains("initial"), "{construct}"),
        other => panic!("{other:?}"),
    }
    let cyc = parse_rtl("module m(input a, output y); wire p = q ^ a; wire q = p; assign y = q; endmodule").unwrap();
    assert!(matches!(elaborate(&cyc), Err(HdlError::CombinationalCycle { .. })));
    let missing = parse_rtl("module m(input a); nothere u(.a(a)); endmodule").unwrap();
    assert!(matches!(elaborate(&missing), Err(HdlError::UnresolvedInstance { .. })));
}

fn random_word(rng: &mut impl Rng) -> u32 {
    const OPS: [Op; 26] = [
        Op::Add, Op::Sub, Op::Slt, Op::Sltu, Op::Xor, Op::Or, Op::And, Op::Addi, Op::Slti, Op::Sltiu,
        Op::Xori, Op::Ori, Op::Andi, Op::Lui, Op::Lw, Op::Sw, Op::Beq, Op::Bne, Op::Blt, Op::Bge,
        Op::Bltu, Op::Bgeu, Op::Jal, Op::Jalr, Op::Ldk, Op::Aes,
    ];
    if rng.gen_bool(0.03) {
        return rng.gen();
    }
    let op = if rng.gen_bool(0.05) { Op::LpSetup } else { OPS[rng.gen_range(0..OPS.len())] };
    let imm = match op {
        Op::Beq | Op::Bne | Op::Blt | Op::Bge | Op::Bltu | Op::Bgeu | Op::Jal => rng.gen_range(-4..8) * 4,
        Op::LpSetup => rng.gen_range(1..4) * 4,
        Op::Jalr => rng.gen_range(0..16) * 4,
        Op::Lui => rng.gen_range(-8..8) << 12,
        _ => rng.gen_range(-100..100),
    };
    encode(op, rng.gen_range(0..8), rng.gen_range(0..8), rng.gen_range(0..8), imm)
}

/// Runs `image` on the MiniRV netlist and on the reference model with the
/// same read data and compares the buses and final registers.
fn lockstep(n: &FlatNetlist, image: &[u32], cycles: usize, seed: u64) {
    let id = |s: &str| n.lookup(s).unwrap();
    let (imem_rdata, dmem_rdata, key_rdata) = (id("imem_rdata"), id("dmem_rdata"), id("key_rdata"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = Simulator::new(n);
    let mut iss = Iss::default();
    for cycle in 0..cycles {
        let (d, k): (u32, u32) = (rng.gen(), rng.gen());
        let word = image.get((iss.pc / 4) as usize).copied().filter(|_| iss.pc % 4 == 0).unwrap_or(0);
        sim.apply(&[(dmem_rdata, d.into()), (key_rdata, k.into())]);
        assert_eq!(sim.value(id("imem_addr")) as u32, iss.pc, "fetch address in cycle {cycle}");
        sim.apply(&[(imem_rdata, word.into())]);
        let want = iss.step(word, d, k);
        let got = Bus {
            imem_addr: sim.value(id("imem_addr")) as u32,
            dmem_we: sim.value(id("dmem_we")) != 0,
            dmem_addr: sim.value(id("dmem_addr")) as u32,
            dmem_wdata: sim.value(id("dmem_wdata")) as u32,
            key_addr: sim.value(id("key_addr")) as u32,
        };
        assert_eq!(got, want, "cycle {cycle}, word {word:#010x}");
        sim.tick();
    }
    let rf: Vec<u32> = sim.mem(id("rf")).iter().map(|&v| v as u32).collect();
    assert_eq!(&rf[1..], &iss.x[1..]);
    assert_eq!(sim.value(id("trapped")) != 0, iss.trapped);
}

#[test]
fn minirv_matches_reference_model_on_fixture_programs() {
    let n = common::minirv(1);
    for (name, img) in common::fixture_programs() {
        let end = img.words.keys().next_back().map_or(0, |a| a / 4 + 1);
        let image: Vec<u32> = (0..end).map(|i| img.words.get(&(i * 4)).copied().unwrap_or(0)).collect();
        for seed in 0..4 {
            lockstep(&n, &image, 300, seed);
        }
        let _ = name;
    }
}

#[test]
fn minirv_matches_reference_model_on_random_programs() {
    let n = common::minirv(1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..150 {
        let image: Vec<u32> = (0..24).map(|_| random_word(&mut rng)).collect();
        lockstep(&n, &image, 120, seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_circuits_round_trip_and_simulate_alike(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::circuits::random_circuit(&mut rng, 0);
        let tree = parse_rtl(&c.source).unwrap();
        let printed = pretty_print(&tree);
        let again = parse_rtl(&printed).unwrap();
        prop_assert_eq!(&tree, &again);
        let m = elaborate(&again).unwrap();
        let inputs: Vec<_> = c.netlist.free_inputs();
        let outs: Vec<_> = c.netlist.signals.iter().filter(|s| s.kind != SignalKind::Memory).map(|s| s.name.clone()).collect();
        let mut a = Simulator::new(&c.netlist);
        let mut b = Simulator::new(&m);
        for _ in 0..20 {
            let drive: Vec<_> = inputs.iter().map(|&i| (i, rng.gen::<u64>() & 3)).collect();
            let drive_m: Vec<_> = drive.iter().map(|&(i, v)| (m.lookup(c.netlist.name(i)).unwrap(), v)).collect();
            a.apply(&drive);
            b.apply(&drive_m);
            for s in &outs {
                prop_assert_eq!(a.value(c.netlist.lookup(s).unwrap()), b.value(m.lookup(s).unwrap()), "{}", s);
            }
            a.tick();
            b.tick();
        }
    }
}
