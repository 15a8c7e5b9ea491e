//! Instruction-level reference model of the MiniRV core (trapping variant).

use leakcover::software::{decode, Op};

/// Bus values the core drives in one cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bus {
    pub imem_addr: u32,
    pub dmem_we: bool,
    pub dmem_addr: u32,
    pub dmem_wdata: u32,
    pub key_addr: u32,
}

#[derive(Clone, Debug, Default)]
pub struct Iss {
    pub pc: u32,
    pub x: [u32; 8],
    pub trapped: bool,
    pub lp_start: u32,
    pub lp_end: u32,
    pub lp_count: u32,
}

pub fn round(state: u32, key: u32) -> u32 {
    let m = state ^ key;
    m.rotate_left(8).wrapping_add(m.rotate_left(16))
}

impl Iss {
    /// Executes the instruction `word` fetched at `pc`, with the given
    /// data and key read values, and returns the bus of this cycle.
    pub fn step(&mut self, word: u32, dmem_rdata: u32, key_rdata: u32) -> Bus {
        let mut bus = Bus {
            imem_addr: self.pc,
            ..Bus::default()
        };
        let i = decode(word);
        if self.trapped {
            return bus;
        }
        if i.op == Op::Illegal {
            self.trapped = true;
            return bus;
        }
        let r = |n: u8| self.x[n as usize];
        let (a, b) = (r(i.rs1), r(i.rs2));
        let imm = i.imm as u32;
        let pc4 = self.pc.wrapping_add(4);
        let mut wb: Option<u32> = None;
        let mut jump: Option<u32> = None;
        match i.op {
            Op::Add => wb = Some(a.wrapping_add(b)),
            Op::Sub => wb = Some(a.wrapping_sub(b)),
            Op::Slt => wb = Some(((a as i32) < (b as i32)) as u32),
            Op::Sltu => wb = Some((a < b) as u32),
            Op::Xor => wb = Some(a ^ b),
            Op::Or => wb = Some(a | b),
            Op::And => wb = Some(a & b),
            Op::Addi => wb = Some(a.wrapping_add(imm)),
            Op::Slti => wb = Some(((a as i32) < i.imm) as u32),
            Op::Sltiu => wb = Some((a < imm) as u32),
            Op::Xori => wb = Some(a ^ imm),
            Op::Ori => wb = Some(a | imm),
            Op::Andi => wb = Some(a & imm),
            Op::Lui => wb = Some(imm),
            Op::Lw => {
                bus.dmem_addr = a.wrapping_add(imm);
                wb = Some(dmem_rdata);
            }
            Op::Sw => {
                bus.dmem_we = true;
                bus.dmem_addr = a.wrapping_add(imm);
                bus.dmem_wdata = b;
            }
            Op::Beq | Op::Bne | Op::Blt | Op::Bge | Op::Bltu | Op::Bgeu => {
                let taken = match i.op {
                    Op::Beq => a == b,
                    Op::Bne => a != b,
                    Op::Blt => (a as i32) < (b as i32),
                    Op::Bge => (a as i32) >= (b as i32),
                    Op::Bltu => a < b,
                    _ => a >= b,
                };
                if taken {
                    jump = Some(self.pc.wrapping_add(imm));
                }
            }
            Op::Jal => {
                wb = Some(pc4);
                jump = Some(self.pc.wrapping_add(imm));
            }
            Op::Jalr => {
                wb = Some(pc4);
                jump = Some(a.wrapping_add(imm) & !1);
            }
            Op::Ldk => {
                bus.key_addr = a.wrapping_add(imm);
                wb = Some(key_rdata);
            }
            Op::Aes => {
                bus.key_addr = b;
                wb = Some(round(a, key_rdata));
            }
            Op::LpSetup | Op::Illegal => {}
        }
        let loop_back = self.lp_count != 0 && self.pc == self.lp_end;
        let next = match jump {
            Some(t) => t,
            None if loop_back => self.lp_start,
            None => pc4,
        };
        if i.op == Op::LpSetup {
            self.lp_start = pc4;
            self.lp_end = self.pc.wrapping_add(imm);
            self.lp_count = a;
        } else if loop_back && jump.is_none() && !matches!(i.op, Op::Jal | Op::Jalr) {
            self.lp_count -= 1;
        }
        if let Some(v) = wb {
            if i.rd != 0 {
                self.x[i.rd as usize] = v;
            }
        }
        self.pc = next;
        bus
    }
}
