mod common;

use leakcover::fixtures;
use leakcover::hdl::Simulator;
use leakcover::pipeline::{RunMode, VerdictKind};
use leakcover::software::{
    assemble, check_inclusion, decode, encode, generate, legal_patterns, validate_assumptions, AsmError, AssumeError,
    Class, CoreInterface, Mode, ProgramImage,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn decode_agrees_with_hardware_decoder() {
    let n = common::minirv(1);
    let (data, illegal) = (n.lookup("imem_rdata").unwrap(), n.lookup("illegal").unwrap());
    let patterns = legal_patterns();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sim = Simulator::new(&n);
    let (mut legal, mut bad) = (0, 0);
    for i in 0..20_000 {
        let word: u32 = if i % 2 == 0 {
            rng.gen()
        } else {
            // flip a few bits of a legal encoding
            let (mask, value, _) = patterns[rng.gen_range(0..patterns.len())];
            let w = value | (rng.gen::<u32>() & !mask);
            if rng.gen_bool(0.3) { w ^ (1 << rng.gen_range(0..32)) } else { w }
        };
        sim.apply(&[(data, u64::from(word))]);
        let hw = sim.value(illegal) != 0;
        let sw = decode(word).class == Class::Illegal;
        assert_eq!(hw, sw, "{word:#010x}");
        if sw { bad += 1 } else { legal += 1 }
    }
    assert!(legal > 5000 && bad > 5000, "{legal} {bad}");
    assert_eq!(decode(0).class, Class::Illegal);
    let nop = decode(0x13);
    assert_eq!((nop.op.mnemonic(), nop.rd, nop.rs1, nop.imm), ("addi", 0, 0, 0));
}

proptest! {
    #[test]
    fn encode_decode_round_trip(p in 0usize..64, rd in 0u8..8, rs1 in 0u8..8, rs2 in 0u8..8, imm in -2048i32..2048) {
        let patterns = legal_patterns();
        let op = patterns[p % patterns.len()].2;
        let w = encode(op, rd, rs1, rs2, imm);
        let i = decode(w);
        prop_assert_eq!(i.op, op);
        prop_assert_eq!(encode(i.op, i.rd, i.rs1, i.rs2, i.imm), w);
    }
}

#[test]
fn hex_and_metadata_round_trip() {
    for (name, img) in common::fixture_programs() {
        let back = ProgramImage::load(&img.to_hex(), &img.metadata_json()).unwrap();
        assert_eq!(back.words.values().filter(|&&w| w != 0).count(), img.words.values().filter(|&&w| w != 0).count(), "{name}");
        for (a, w) in &img.words {
            assert_eq!(back.words.get(a), Some(w), "{name} {a:#x}");
        }
        assert_eq!(back.call_sites, img.call_sites);
        assert_eq!(back.symbols, img.symbols);
    }
    assert!(matches!(ProgramImage::load("zz\n", "{}"), Err(AsmError::Metadata(_)) | Err(AsmError::Hex(_))));
    assert!(matches!(assemble("nop\nfrob x1, x2\n"), Err(AsmError::Syntax { line: 2, .. })));
}

#[test]
fn used_domain_is_the_image_encodings() {
    let n = common::minirv(1);
    let img = common::program(fixtures::NAIVE);
    let set = generate(Mode::Used, &n, &common::interface(), Some(&img), None).unwrap();
    let data = n.lookup("imem_rdata").unwrap();
    let mut sim = Simulator::new(&n);
    for w in img.encodings() {
        sim.apply(&[(data, u64::from(w))]);
        assert!(set.violated(&sim).is_none(), "{w:#x}");
    }
    for w in [0x13u32, 0, 0xffff_ffff] {
        if img.encodings().contains(&w) {
            continue;
        }
        sim.apply(&[(data, u64::from(w))]);
        assert!(set.violated(&sim).is_some(), "{w:#x}");
    }
}

#[test]
fn generator_errors() {
    let n = common::minirv(1);
    let iface = common::interface();
    let img = common::program(fixtures::NAIVE);
    assert_eq!(generate(Mode::Used, &n, &iface, None, None).unwrap_err(), AssumeError::NoProgram(Mode::Used));

    let mut stripped = img.clone();
    stripped.call_sites.clear();
    assert!(matches!(
        generate(Mode::Jumps, &n, &iface, Some(&stripped), None),
        Err(AssumeError::MissingMetadata(_))
    ));

    assert_eq!(img.call_depth(), Some(1));
    assert_eq!(
        generate(Mode::Stack, &n, &iface, Some(&img), Some(0)).unwrap_err(),
        AssumeError::StackTooShallow { need: 1, depth: 0 }
    );
    let rec = assemble("main: call f\nj main\nf: call f\nret\n").unwrap();
    assert_eq!(rec.call_depth(), None);
    assert_eq!(generate(Mode::Stack, &n, &iface, Some(&rec), None).unwrap_err(), AssumeError::Recursive);

    let mut wrong = iface.clone();
    wrong.fetch_data = "nosuch".into();
    assert_eq!(
        generate(Mode::Legal, &n, &wrong, None, None).unwrap_err(),
        AssumeError::UnknownSignal("nosuch".into())
    );
    assert!(matches!(CoreInterface::from_toml("fetch_addr = 1"), Err(AssumeError::Config(_))));
}

#[test]
fn modes_form_an_inclusion_chain() {
    let n = common::minirv(1);
    let iface = common::interface();
    for (name, img) in common::fixture_programs() {
        let sets: Vec<_> = Mode::ALL
            .iter()
            .map(|&m| generate(m, &n, &iface, Some(&img), None).unwrap())
            .collect();
        let chain: Vec<_> = sets.iter().collect();
        check_inclusion(&chain).unwrap_or_else(|e| panic!("{name}: {e}"));
        let backwards: Vec<_> = sets.iter().rev().collect();
        assert!(matches!(check_inclusion(&backwards), Err(AssumeError::NotIncluded { .. })), "{name}");
    }
}

#[test]
fn validation_catches_a_foreign_program() {
    let n = common::minirv(1);
    let iface = common::interface();
    let naive = common::program(fixtures::NAIVE);
    let patched = common::program(fixtures::PATCHED);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for mode in [Mode::Used, Mode::Jumps, Mode::Stack] {
        let own = generate(mode, &n, &iface, Some(&naive), None).unwrap();
        assert_eq!(validate_assumptions(&n, &iface, &naive, &own, 500, |_, _| rng.gen()).unwrap(), Ok(()));
        let other = generate(mode, &n, &iface, Some(&patched), None).unwrap();
        let v = validate_assumptions(&n, &iface, &naive, &other, 500, |_, _| rng.gen()).unwrap();
        assert!(v.is_err(), "{mode}: naive run satisfied the patched assumptions");
    }
}

/// With the trap disabled, an illegal encoding forwards key data; only the
/// Legal constraint rules that path out.
#[test]
fn legal_mode_matters_without_trap() {
    let inputs = common::inputs(0, Some(common::program(fixtures::NAIVE)));
    let none = common::run_mode(&inputs, RunMode::None);
    let legal = common::run_mode(&inputs, RunMode::Legal);
    let a = none.paths_with(VerdictKind::Uncoverable);
    let b = legal.paths_with(VerdictKind::Uncoverable);
    assert!(b.len() > a.len(), "None {a:?} Legal {b:?}");
    assert!(a.iter().all(|p| b.contains(p)));
}
