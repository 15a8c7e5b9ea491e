//! Random small sequential circuits and cover properties over them.

use leakcover::hdl::{elaborate, parse_rtl, BinaryOp, Expr, FlatNetlist};
use leakcover::property::{CondKind, Origin, PropKind, Property, TemporalSeq};
use rand::seq::SliceRandom;
use rand::Rng;

pub struct Circuit {
    pub source: String,
    pub netlist: FlatNetlist,
    pub assumptions: Vec<Expr>,
    pub properties: Vec<Property>,
}

pub struct Sig {
    pub name: String,
    pub width: u32,
}

fn leaf(rng: &mut impl Rng, sigs: &[Sig]) -> String {
    if rng.gen_bool(0.2) {
        return format!("2'd{}", rng.gen_range(0..4));
    }
    let s = sigs.choose(rng).unwrap();
    if s.width > 1 && rng.gen_bool(0.2) {
        format!("{}[{}]", s.name, rng.gen_range(0..s.width))
    } else {
        s.name.clone()
    }
}

fn expr(rng: &mut impl Rng, sigs: &[Sig], depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng, sigs);
    }
    let a = expr(rng, sigs, depth - 1);
    let b = expr(rng, sigs, depth - 1);
    match rng.gen_range(0..10) {
        0 => format!("({a} + {b})"),
        1 => format!("({a} - {b})"),
        2 => format!("({a} & {b})"),
        3 => format!("({a} | {b})"),
        4 => format!("({a} ^ {b})"),
        5 => format!("(~{a})"),
        6 => format!("({a} == {b})"),
        7 => format!("({a} < {b})"),
        8 => {
            let c = expr(rng, sigs, depth - 1);
            format!("({c} ? {a} : {b})")
        }
        _ => format!("({a} != {b})"),
    }
}

/// A module with a 2-bit and a 1-bit input, up to four registers, a comb
/// wire and sometimes a two-word memory; at most 14 state bits.
pub fn random_circuit(rng: &mut impl Rng, index: usize) -> Circuit {
    let mut sigs = vec![
        Sig { name: "i0".into(), width: 2 },
        Sig { name: "i1".into(), width: 1 },
    ];
    let nregs = rng.gen_range(2..=4);
    let mut regs = Vec::new();
    for r in 0..nregs {
        regs.push(Sig {
            name: format!("r{r}"),
            width: rng.gen_range(1..=3),
        });
    }
    let mut body = String::new();
    for r in &regs {
        body.push_str(&format!("    reg [{}:0] {};\n", r.width - 1, r.name));
    }
    let memory = rng.gen_bool(0.4);
    if memory {
        body.push_str("    reg [1:0] m [0:1];\n");
    }
    sigs.extend(regs.iter().map(|r| Sig {
        name: r.name.clone(),
        width: r.width,
    }));
    let w = expr(rng, &sigs, 2);
    body.push_str(&format!("    wire [1:0] w = {w};\n"));
    sigs.push(Sig { name: "w".into(), width: 2 });
    if memory {
        body.push_str("    wire [1:0] mr = m[i1];\n");
        sigs.push(Sig { name: "mr".into(), width: 2 });
    }
    body.push_str("    always @(posedge clk) begin\n");
    for r in &regs {
        let next = expr(rng, &sigs, 2);
        if rng.gen_bool(0.4) {
            let en = expr(rng, &sigs, 1);
            body.push_str(&format!("        if (({en}) ^ i1) {} <= {next};\n", r.name));
        } else {
            body.push_str(&format!("        {} <= {next};\n", r.name));
        }
    }
    if memory {
        let en = expr(rng, &sigs, 1);
        let data = expr(rng, &sigs, 1);
        body.push_str(&format!("        if (({en}) ^ i0[0]) m[r0[0]] <= {data};\n"));
    }
    body.push_str("    end\n");
    body.push_str("    assign o = w;\n");
    let source = format!(
        "module rc{index} (\n    input clk,\n    input [1:0] i0,\n    input i1,\n    output [1:0] o\n);\n{body}endmodule\n"
    );
    let netlist = elaborate(&parse_rtl(&source).unwrap_or_else(|e| panic!("{e}\n{source}"))).unwrap_or_else(|e| panic!("{e}\n{source}"));

    let mut assumptions = Vec::new();
    if rng.gen_bool(0.3) {
        let i0 = netlist.lookup("i0").unwrap();
        assumptions.push(Expr::binary(
            BinaryOp::Ne,
            Expr::signal(i0, 2),
            Expr::constant(rng.gen_range(0..4), 2),
        ));
    }
    let properties = (0..6)
        .map(|p| {
            let nodes = rng.gen_range(1..=5);
            Property {
                name: format!("rc{index}_p{p}"),
                kind: PropKind::Cover,
                origin: Origin::Path(format!("P{p}")),
                body: random_seq(rng, &netlist, &sigs, nodes),
                frozen: Vec::new(),
            }
        })
        .collect();
    Circuit {
        source,
        netlist,
        assumptions,
        properties,
    }
}

fn random_atom(rng: &mut impl Rng, netlist: &FlatNetlist, sigs: &[Sig]) -> TemporalSeq {
    let s = sigs.choose(rng).unwrap();
    let id = netlist.lookup(&s.name).unwrap();
    let v = rng.gen_range(0..(1u64 << s.width));
    let op = if rng.gen_bool(0.75) { BinaryOp::Eq } else { BinaryOp::Ne };
    TemporalSeq::atom(
        Expr::binary(op, Expr::signal(id, s.width), Expr::constant(v, s.width)),
        CondKind::Active,
    )
}

/// Sequence with exactly `nodes` nodes (an atom absorbs a leftover node).
pub fn random_seq(rng: &mut impl Rng, netlist: &FlatNetlist, sigs: &[Sig], nodes: usize) -> TemporalSeq {
    if nodes <= 1 {
        return random_atom(rng, netlist, sigs);
    }
    if nodes == 2 || rng.gen_bool(0.2) {
        return TemporalSeq::rep(random_seq(rng, netlist, sigs, nodes - 1));
    }
    let left = rng.gen_range(1..nodes - 1);
    let a = random_seq(rng, netlist, sigs, left);
    let b = random_seq(rng, netlist, sigs, nodes - 1 - left);
    if rng.gen_bool(0.5) {
        TemporalSeq::concat(a, b)
    } else {
        TemporalSeq::fuse(a, b)
    }
}
