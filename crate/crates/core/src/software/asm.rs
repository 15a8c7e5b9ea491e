//! Two-pass assembler for MiniRV and the program image it produces.
//!
//! ```text
//! .equ COUNT, 3          # named constant
//! start:
//!     li   x5, 0x12345678 # lui+addi, or addi alone when it fits
//!     ldk  x7, 0(x6)
//!     call copy           # jal x1, copy; recorded as a call site
//!     lp.setup x5, end    # hardware loop over the next instructions up to `end`
//! end:
//!     ret                 # jalr x0, 0(x1)
//! ```
//!
//! Besides the words, the image records call sites, hardware loops and the
//! source line of every word; [`ProgramImage::metadata_json`] writes these as
//! a sidecar file next to the hex image.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::isa::{decode_at, encode, Class, Instruction, Op};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AsmError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("malformed hex image at line {0}")]
    Hex(usize),
    #[error("malformed metadata: {0}")]
    Metadata(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub call: u32,
    pub callee: u32,
    /// Address execution resumes at after the callee returns.
    pub ret: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HwLoop {
    /// First instruction of the body.
    pub start: u32,
    /// Last instruction of the body.
    pub end: u32,
    /// Where execution continues after the last iteration.
    pub exit: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLine {
    pub line: usize,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramImage {
    /// Byte address to encoding; addresses are multiples of 4.
    #[serde(skip)]
    pub words: BTreeMap<u32, u32>,
    pub entry: u32,
    pub call_sites: Vec<CallSite>,
    pub hwloops: Vec<HwLoop>,
    pub symbols: BTreeMap<u32, SourceLine>,
    pub labels: BTreeMap<String, u32>,
}

impl ProgramImage {
    pub fn instructions(&self) -> Vec<Instruction> {
        self.words.iter().map(|(&a, &w)| decode_at(a, w)).collect()
    }

    /// Distinct encodings, ascending.
    pub fn encodings(&self) -> BTreeSet<u32> {
        self.words.values().copied().collect()
    }

    pub fn return_addresses(&self) -> BTreeSet<u32> {
        self.call_sites.iter().map(|c| c.ret).collect()
    }

    /// Longest chain of nested calls starting at the entry, or `None` when
    /// the call graph is recursive.
    pub fn call_depth(&self) -> Option<usize> {
        let mut funcs: BTreeSet<u32> = self.call_sites.iter().map(|c| c.callee).collect();
        funcs.insert(self.entry);
        let owner = |addr: u32| funcs.range(..=addr).next_back().copied().unwrap_or(self.entry);
        let mut graph: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for c in &self.call_sites {
            graph.entry(owner(c.call)).or_default().insert(c.callee);
        }
        fn depth(f: u32, g: &BTreeMap<u32, BTreeSet<u32>>, stack: &mut Vec<u32>) -> Option<usize> {
            if stack.contains(&f) {
                return None;
            }
            stack.push(f);
            let mut best = 0;
            for &c in g.get(&f).into_iter().flatten() {
                best = best.max(1 + depth(c, g, stack)?);
            }
            stack.pop();
            Some(best)
        }
        depth(self.entry, &graph, &mut Vec::new())
    }

    /// One 8-digit hex word per line, from address 0; gaps are zero.
    pub fn to_hex(&self) -> String {
        let end = self.words.keys().next_back().map_or(0, |a| a / 4 + 1);
        (0..end)
            .map(|i| format!("{:08x}\n", self.words.get(&(i * 4)).copied().unwrap_or(0)))
            .collect()
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Loads a hex image and its sidecar metadata.
    pub fn load(hex: &str, metadata: &str) -> Result<ProgramImage, AsmError> {
        let mut img: ProgramImage =
            serde_json::from_str(metadata).map_err(|e| AsmError::Metadata(e.to_string()))?;
        img.words = parse_hex(hex)?;
        Ok(img)
    }

    /// Source line of the word at `addr`, if any.
    pub fn source(&self, addr: u32) -> Option<&SourceLine> {
        self.symbols.get(&addr)
    }
}

pub fn parse_hex(hex: &str) -> Result<BTreeMap<u32, u32>, AsmError> {
    let mut words = BTreeMap::new();
    let mut addr = 0u32;
    for (i, line) in hex.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let w = u32::from_str_radix(t.trim_start_matches("0x"), 16).map_err(|_| AsmError::Hex(i + 1))?;
        words.insert(addr, w);
        addr += 4;
    }
    Ok(words)
}

struct Line<'a> {
    no: usize,
    text: &'a str,
    mnemonic: String,
    args: Vec<String>,
    addr: u32,
    size: u32,
}

fn parse_num(s: &str) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let v = if let Some(h) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(&h.replace('_', ""), 16).ok()?
    } else if let Some(b) = body.strip_prefix("0b") {
        i64::from_str_radix(&b.replace('_', ""), 2).ok()?
    } else {
        body.replace('_', "").parse().ok()?
    };
    Some(if neg { -v } else { v })
}

fn fits12(v: i64) -> bool {
    (-2048..2048).contains(&v)
}

/// Assembles `text` with extra named constants (as if given by `.equ`).
pub fn assemble_with(text: &str, defines: &[(&str, i64)]) -> Result<ProgramImage, AsmError> {
    let mut consts: HashMap<String, i64> = defines.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let mut labels = BTreeMap::new();
    let mut lines = Vec::new();
    let mut addr = 0u32;
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let err = |msg: String| AsmError::Syntax { line: no, msg };
        let mut t = raw.split('#').next().unwrap_or("").trim();
        while let Some(pos) = t.find(':') {
            let (label, rest) = t.split_at(pos);
            let label = label.trim();
            if label.is_empty() || !label.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
                break;
            }
            if labels.insert(label.to_string(), addr).is_some() {
                return Err(err(format!("duplicate label `{label}`")));
            }
            t = rest[1..].trim();
        }
        if t.is_empty() {
            continue;
        }
        let (mnemonic, rest) = match t.split_once(char::is_whitespace) {
            Some((m, r)) => (m.to_string(), r.trim()),
            None => (t.to_string(), ""),
        };
        let args: Vec<String> = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(',').map(|a| a.trim().to_string()).collect()
        };
        if mnemonic == ".equ" {
            if args.len() != 2 {
                return Err(err(".equ takes a name and a value".into()));
            }
            if !consts.contains_key(&args[0]) {
                let v = parse_num(&args[1])
                    .or_else(|| consts.get(&args[1]).copied())
                    .ok_or_else(|| err(format!("bad constant `{}`", args[1])))?;
                consts.insert(args[0].clone(), v);
            }
            continue;
        }
        let size = if mnemonic == "li" {
            let v = args
                .get(1)
                .and_then(|a| parse_num(a).or_else(|| consts.get(a).copied()))
                .ok_or_else(|| err("li needs a register and a constant".into()))?;
            if fits12(v) {
                4
            } else {
                8
            }
        } else {
            4
        };
        lines.push(Line {
            no,
            text: raw.trim(),
            mnemonic,
            args,
            addr,
            size,
        });
        addr += size;
    }
    let mut img = ProgramImage {
        words: BTreeMap::new(),
        entry: 0,
        call_sites: Vec::new(),
        hwloops: Vec::new(),
        symbols: BTreeMap::new(),
        labels: labels.clone(),
    };
    for l in &lines {
        for (k, w) in encode_line(l, &labels, &consts)?.into_iter().enumerate() {
            let a = l.addr + 4 * k as u32;
            img.words.insert(a, w);
            img.symbols.insert(
                a,
                SourceLine {
                    line: l.no,
                    text: l.text.to_string(),
                },
            );
            let ins = decode_at(a, w);
            match ins.class {
                Class::Call if ins.op == Op::Jal => img.call_sites.push(CallSite {
                    call: a,
                    callee: a.wrapping_add(ins.imm as u32),
                    ret: a + 4,
                }),
                Class::Call => {
                    return Err(AsmError::Syntax {
                        line: l.no,
                        msg: "indirect calls have no static callee".into(),
                    })
                }
                Class::Hwloop => {
                    let end = a.wrapping_add(ins.imm as u32);
                    img.hwloops.push(HwLoop {
                        start: a + 4,
                        end,
                        exit: end + 4,
                    });
                }
                _ => {}
            }
        }
    }
    Ok(img)
}

pub fn assemble(text: &str) -> Result<ProgramImage, AsmError> {
    assemble_with(text, &[])
}

fn encode_line(l: &Line, labels: &BTreeMap<String, u32>, consts: &HashMap<String, i64>) -> Result<Vec<u32>, AsmError> {
    let err = |msg: String| AsmError::Syntax { line: l.no, msg };
    let reg = |s: &str| -> Result<u8, AsmError> {
        let n = match s {
            "zero" => Some(0),
            "ra" => Some(1),
            "sp" => Some(2),
            _ => s.strip_prefix('x').and_then(|n| n.parse::<u8>().ok()),
        };
        n.filter(|&n| n < 32).ok_or_else(|| err(format!("bad register `{s}`")))
    };
    let value = |s: &str| -> Result<i64, AsmError> {
        parse_num(s)
            .or_else(|| consts.get(s).copied())
            .ok_or_else(|| err(format!("bad immediate `{s}`")))
    };
    let target = |s: &str| -> Result<i32, AsmError> {
        match labels.get(s) {
            Some(&a) => Ok(a.wrapping_sub(l.addr) as i32),
            None => value(s).map(|v| v as i32),
        }
    };
    // `imm(reg)`
    let mem = |s: &str| -> Result<(i32, u8), AsmError> {
        let (imm, rest) = s.split_once('(').ok_or_else(|| err(format!("expected imm(reg), got `{s}`")))?;
        let r = rest.strip_suffix(')').ok_or_else(|| err(format!("unclosed `(` in `{s}`")))?;
        let imm = if imm.trim().is_empty() { 0 } else { value(imm.trim())? as i32 };
        Ok((imm, reg(r.trim())?))
    };
    let a = &l.args;
    let want = |n: usize| -> Result<(), AsmError> {
        if a.len() == n {
            Ok(())
        } else {
            Err(err(format!("`{}` takes {n} operands", l.mnemonic)))
        }
    };
    let check_imm = |v: i64, bits: u32| -> Result<i32, AsmError> {
        let lo = -(1i64 << (bits - 1));
        let hi = 1i64 << (bits - 1);
        if (lo..hi).contains(&v) {
            Ok(v as i32)
        } else {
            Err(err(format!("immediate {v} does not fit in {bits} bits")))
        }
    };
    let m = l.mnemonic.as_str();
    let words = match m {
        "nop" => vec![encode(Op::Addi, 0, 0, 0, 0)],
        ".word" => {
            want(1)?;
            vec![value(&a[0])? as u32]
        }
        "li" => {
            want(2)?;
            let rd = reg(&a[0])?;
            let v = value(&a[1])?;
            if fits12(v) {
                vec![encode(Op::Addi, rd, 0, 0, v as i32)]
            } else {
                let v = v as u32;
                let lo = ((v & 0xfff) as i32) << 20 >> 20;
                let hi = v.wrapping_sub(lo as u32);
                vec![encode(Op::Lui, rd, 0, 0, hi as i32), encode(Op::Addi, rd, rd, 0, lo)]
            }
        }
        "mv" => {
            want(2)?;
            vec![encode(Op::Addi, reg(&a[0])?, reg(&a[1])?, 0, 0)]
        }
        "j" => {
            want(1)?;
            vec![encode(Op::Jal, 0, 0, 0, target(&a[0])?)]
        }
        "call" => {
            want(1)?;
            vec![encode(Op::Jal, 1, 0, 0, target(&a[0])?)]
        }
        "ret" => {
            want(0)?;
            vec![encode(Op::Jalr, 0, 1, 0, 0)]
        }
        _ => {
            let op = Op::from_mnemonic(m).ok_or_else(|| err(format!("unknown mnemonic `{m}`")))?;
            let w = match op {
                Op::Add | Op::Sub | Op::Slt | Op::Sltu | Op::Xor | Op::Or | Op::And | Op::Aes => {
                    want(3)?;
                    encode(op, reg(&a[0])?, reg(&a[1])?, reg(&a[2])?, 0)
                }
                Op::Addi | Op::Slti | Op::Sltiu | Op::Xori | Op::Ori | Op::Andi => {
                    want(3)?;
                    encode(op, reg(&a[0])?, reg(&a[1])?, 0, check_imm(value(&a[2])?, 12)?)
                }
                Op::Lui => {
                    want(2)?;
                    let v = value(&a[1])?;
                    if !(0..1 << 20).contains(&v) {
                        return Err(err(format!("lui immediate {v} out of range")));
                    }
                    encode(op, reg(&a[0])?, 0, 0, (v << 12) as i32)
                }
                Op::Lw | Op::Ldk | Op::Jalr => {
                    want(2)?;
                    let (imm, rs1) = mem(&a[1])?;
                    encode(op, reg(&a[0])?, rs1, 0, check_imm(i64::from(imm), 12)?)
                }
                Op::Sw => {
                    want(2)?;
                    let (imm, rs1) = mem(&a[1])?;
                    encode(op, 0, rs1, reg(&a[0])?, check_imm(i64::from(imm), 12)?)
                }
                Op::Beq | Op::Bne | Op::Blt | Op::Bge | Op::Bltu | Op::Bgeu => {
                    want(3)?;
                    let off = check_imm(i64::from(target(&a[2])?), 13)?;
                    encode(op, 0, reg(&a[0])?, reg(&a[1])?, off)
                }
                Op::Jal => {
                    want(2)?;
                    encode(op, reg(&a[0])?, 0, 0, check_imm(i64::from(target(&a[1])?), 21)?)
                }
                Op::LpSetup => {
                    want(2)?;
                    let off = check_imm(i64::from(target(&a[1])?), 12)?;
                    if off <= 0 {
                        return Err(err("loop end must follow lp.setup".into()));
                    }
                    encode(op, 0, reg(&a[0])?, 0, off)
                }
                Op::Illegal => unreachable!("not a mnemonic"),
            };
            vec![w]
        }
    };
    if words.len() as u32 * 4 != l.size {
        return Err(err("size changed between passes".into()));
    }
    Ok(words)
}
