//! MiniRV: an RV32I subset with eight registers plus three custom
//! instructions.
//!
//! | op        | format | opcode  | funct3 | funct7 |
//! |-----------|--------|---------|--------|--------|
//! | add/sub   | R      | 0110011 | 000    | 0000000/0100000 |
//! | slt/sltu/xor/or/and | R | 0110011 | 010/011/100/110/111 | 0000000 |
//! | addi/slti/sltiu/xori/ori/andi | I | 0010011 | 000/010/011/100/110/111 | |
//! | lui       | U      | 0110111 |        |        |
//! | lw        | I      | 0000011 | 010    |        |
//! | sw        | S      | 0100011 | 010    |        |
//! | beq/bne/blt/bge/bltu/bgeu | B | 1100011 | 000/001/100/101/110/111 | |
//! | jal       | J      | 1101111 |        |        |
//! | jalr      | I      | 1100111 | 000    |        |
//! | ldk       | I      | 0001011 | 010    |        |
//! | aes       | R      | 0101011 | 000    | 0000000 |
//! | lp.setup  | I      | 1011011 | 000    |        |
//!
//! `ldk rd, imm(rs1)` loads word `rs1 + imm` of the key memory into `rd`.
//! `aes rd, rs1, rs2` runs one cipher round on `rs1` with key word `rs2`.
//! `lp.setup rs1, imm` starts a hardware loop over `pc + 4 ..= pc + imm`
//! that jumps back `rs1` more times.
//!
//! Register fields above `x7` are illegal, as is every encoding not listed.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    Alu,
    Load,
    Store,
    LoadKey,
    Branch,
    Jump,
    Call,
    Return,
    Hwloop,
    Illegal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Sub,
    Slt,
    Sltu,
    Xor,
    Or,
    And,
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Lui,
    Lw,
    Sw,
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
    Jal,
    Jalr,
    Ldk,
    Aes,
    LpSetup,
    Illegal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    R,
    I,
    S,
    B,
    U,
    J,
}

pub const OPC_OP: u32 = 0b0110011;
pub const OPC_OP_IMM: u32 = 0b0010011;
pub const OPC_LUI: u32 = 0b0110111;
pub const OPC_LOAD: u32 = 0b0000011;
pub const OPC_STORE: u32 = 0b0100011;
pub const OPC_BRANCH: u32 = 0b1100011;
pub const OPC_JAL: u32 = 0b1101111;
pub const OPC_JALR: u32 = 0b1100111;
pub const OPC_LDK: u32 = 0b0001011;
pub const OPC_AES: u32 = 0b0101011;
pub const OPC_LOOP: u32 = 0b1011011;

/// `(op, format, opcode, funct3, funct7)`.
const TABLE: &[(Op, Format, u32, Option<u32>, Option<u32>)] = &[
    (Op::Add, Format::R, OPC_OP, Some(0), Some(0)),
    (Op::Sub, Format::R, OPC_OP, Some(0), Some(0x20)),
    (Op::Slt, Format::R, OPC_OP, Some(2), Some(0)),
    (Op::Sltu, Format::R, OPC_OP, Some(3), Some(0)),
    (Op::Xor, Format::R, OPC_OP, Some(4), Some(0)),
    (Op::Or, Format::R, OPC_OP, Some(6), Some(0)),
    (Op::And, Format::R, OPC_OP, Some(7), Some(0)),
    (Op::Addi, Format::I, OPC_OP_IMM, Some(0), None),
    (Op::Slti, Format::I, OPC_OP_IMM, Some(2), None),
    (Op::Sltiu, Format::I, OPC_OP_IMM, Some(3), None),
    (Op::Xori, Format::I, OPC_OP_IMM, Some(4), None),
    (Op::Ori, Format::I, OPC_OP_IMM, Some(6), None),
    (Op::Andi, Format::I, OPC_OP_IMM, Some(7), None),
    (Op::Lui, Format::U, OPC_LUI, None, None),
    (Op::Lw, Format::I, OPC_LOAD, Some(2), None),
    (Op::Sw, Format::S, OPC_STORE, Some(2), None),
    (Op::Beq, Format::B, OPC_BRANCH, Some(0), None),
    (Op::Bne, Format::B, OPC_BRANCH, Some(1), None),
    (Op::Blt, Format::B, OPC_BRANCH, Some(4), None),
    (Op::Bge, Format::B, OPC_BRANCH, Some(5), None),
    (Op::Bltu, Format::B, OPC_BRANCH, Some(6), None),
    (Op::Bgeu, Format::B, OPC_BRANCH, Some(7), None),
    (Op::Jal, Format::J, OPC_JAL, None, None),
    (Op::Jalr, Format::I, OPC_JALR, Some(0), None),
    (Op::Ldk, Format::I, OPC_LDK, Some(2), None),
    (Op::Aes, Format::R, OPC_AES, Some(0), Some(0)),
    (Op::LpSetup, Format::I, OPC_LOOP, Some(0), None),
];

/// Registers per field: `x0..=x7`.
pub const NUM_REGS: u32 = 8;

const RD_HI: u32 = 0b11 << 10;
const RS1_HI: u32 = 0b11 << 18;
const RS2_HI: u32 = 0b11 << 23;

/// One `(mask, value, op)` rule per legal instruction: a word is legal for
/// `op` iff `word & mask == value`.
pub fn legal_patterns() -> Vec<(u32, u32, Op)> {
    TABLE
        .iter()
        .map(|&(op, fmt, opc, f3, f7)| {
            let mut mask = 0x7f;
            let mut value = opc;
            if let Some(f3) = f3 {
                mask |= 0x7 << 12;
                value |= f3 << 12;
            }
            if let Some(f7) = f7 {
                mask |= 0x7f << 25;
                value |= f7 << 25;
            }
            mask |= match fmt {
                Format::R => RD_HI | RS1_HI | RS2_HI,
                Format::I => RD_HI | RS1_HI,
                Format::S | Format::B => RS1_HI | RS2_HI,
                Format::U | Format::J => RD_HI,
            };
            (mask, value, op)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Instruction {
    pub address: u32,
    pub encoding: u32,
    pub op: Op,
    pub class: Class,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    pub imm: i32,
}

fn sext(v: u32, bits: u32) -> i32 {
    ((v << (32 - bits)) as i32) >> (32 - bits)
}

fn imm_of(fmt: Format, w: u32) -> i32 {
    match fmt {
        Format::R => 0,
        Format::I => (w as i32) >> 20,
        Format::S => sext(((w >> 25) << 5) | ((w >> 7) & 0x1f), 12),
        Format::B => sext(
            ((w >> 31) << 12) | (((w >> 7) & 1) << 11) | (((w >> 25) & 0x3f) << 5) | (((w >> 8) & 0xf) << 1),
            13,
        ),
        Format::U => (w & 0xffff_f000) as i32,
        Format::J => sext(
            ((w >> 31) << 20) | (((w >> 12) & 0xff) << 12) | (((w >> 20) & 1) << 11) | (((w >> 21) & 0x3ff) << 1),
            21,
        ),
    }
}

fn class_of(op: Op, rd: u8, rs1: u8) -> Class {
    match op {
        Op::Lw => Class::Load,
        Op::Sw => Class::Store,
        Op::Ldk => Class::LoadKey,
        Op::Beq | Op::Bne | Op::Blt | Op::Bge | Op::Bltu | Op::Bgeu => Class::Branch,
        Op::Jal | Op::Jalr if rd == 1 => Class::Call,
        Op::Jalr if rd == 0 && rs1 == 1 => Class::Return,
        Op::Jal | Op::Jalr => Class::Jump,
        Op::LpSetup => Class::Hwloop,
        Op::Illegal => Class::Illegal,
        _ => Class::Alu,
    }
}

pub fn decode(word: u32) -> Instruction {
    decode_at(0, word)
}

pub fn decode_at(address: u32, word: u32) -> Instruction {
    let hit = TABLE.iter().zip(legal_patterns()).find(|(_, (m, v, _))| word & m == *v);
    let (op, fmt) = match hit {
        Some((&(op, fmt, ..), _)) => (op, Some(fmt)),
        None => (Op::Illegal, None),
    };
    let (rd, rs1, rs2) = match fmt {
        Some(f) => {
            let rd = ((word >> 7) & 0x1f) as u8;
            let rs1 = ((word >> 15) & 0x1f) as u8;
            let rs2 = ((word >> 20) & 0x1f) as u8;
            match f {
                Format::R => (rd, rs1, rs2),
                Format::I => (rd, rs1, 0),
                Format::S | Format::B => (0, rs1, rs2),
                Format::U | Format::J => (rd, 0, 0),
            }
        }
        None => (0, 0, 0),
    };
    Instruction {
        address,
        encoding: word,
        op,
        class: class_of(op, rd, rs1),
        rd,
        rs1,
        rs2,
        imm: fmt.map_or(0, |f| imm_of(f, word)),
    }
}

fn fmt_of(op: Op) -> Option<(Format, u32, Option<u32>, Option<u32>)> {
    TABLE
        .iter()
        .find(|t| t.0 == op)
        .map(|&(_, f, o, f3, f7)| (f, o, f3, f7))
}

/// Encodes an instruction; immediates are truncated to their field.
pub fn encode(op: Op, rd: u8, rs1: u8, rs2: u8, imm: i32) -> u32 {
    let Some((fmt, opc, f3, f7)) = fmt_of(op) else {
        return 0;
    };
    let (rd, rs1, rs2) = (u32::from(rd), u32::from(rs1), u32::from(rs2));
    let imm = imm as u32;
    let f3 = f3.unwrap_or(0) << 12;
    let f7 = f7.unwrap_or(0) << 25;
    match fmt {
        Format::R => f7 | rs2 << 20 | rs1 << 15 | f3 | rd << 7 | opc,
        Format::I => (imm & 0xfff) << 20 | rs1 << 15 | f3 | rd << 7 | opc,
        Format::S => ((imm >> 5) & 0x7f) << 25 | rs2 << 20 | rs1 << 15 | f3 | (imm & 0x1f) << 7 | opc,
        Format::B => {
            ((imm >> 12) & 1) << 31
                | ((imm >> 5) & 0x3f) << 25
                | rs2 << 20
                | rs1 << 15
                | f3
                | ((imm >> 1) & 0xf) << 8
                | ((imm >> 11) & 1) << 7
                | opc
        }
        Format::U => (imm & 0xffff_f000) | rd << 7 | opc,
        Format::J => {
            ((imm >> 20) & 1) << 31
                | ((imm >> 1) & 0x3ff) << 21
                | ((imm >> 11) & 1) << 20
                | ((imm >> 12) & 0xff) << 12
                | rd << 7
                | opc
        }
    }
}

impl Op {
    pub fn mnemonic(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Slt => "slt",
            Op::Sltu => "sltu",
            Op::Xor => "xor",
            Op::Or => "or",
            Op::And => "and",
            Op::Addi => "addi",
            Op::Slti => "slti",
            Op::Sltiu => "sltiu",
            Op::Xori => "xori",
            Op::Ori => "ori",
            Op::Andi => "andi",
            Op::Lui => "lui",
            Op::Lw => "lw",
            Op::Sw => "sw",
            Op::Beq => "beq",
            Op::Bne => "bne",
            Op::Blt => "blt",
            Op::Bge => "bge",
            Op::Bltu => "bltu",
            Op::Bgeu => "bgeu",
            Op::Jal => "jal",
            Op::Jalr => "jalr",
            Op::Ldk => "ldk",
            Op::Aes => "aes",
            Op::LpSetup => "lp.setup",
            Op::Illegal => "illegal",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Op> {
        TABLE.iter().map(|t| t.0).find(|op| op.mnemonic() == s)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.op.mnemonic();
        let (rd, rs1, rs2, imm) = (self.rd, self.rs1, self.rs2, self.imm);
        match fmt_of(self.op).map(|t| t.0) {
            None => write!(f, "illegal 0x{:08x}", self.encoding),
            Some(Format::R) => write!(f, "{m} x{rd}, x{rs1}, x{rs2}"),
            Some(Format::I) if matches!(self.op, Op::Lw | Op::Ldk | Op::Jalr) => {
                write!(f, "{m} x{rd}, {imm}(x{rs1})")
            }
            Some(Format::I) if self.op == Op::LpSetup => write!(f, "{m} x{rs1}, {imm}"),
            Some(Format::I) => write!(f, "{m} x{rd}, x{rs1}, {imm}"),
            Some(Format::S) => write!(f, "{m} x{rs2}, {imm}(x{rs1})"),
            Some(Format::B) => write!(f, "{m} x{rs1}, x{rs2}, {imm}"),
            Some(Format::U) => write!(f, "{m} x{rd}, 0x{:x}", (imm as u32) >> 12),
            Some(Format::J) => write!(f, "{m} x{rd}, {imm}"),
        }
    }
}
