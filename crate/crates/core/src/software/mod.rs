//! Fixture ISA, assembler, and assumptions derived from a concrete program.

mod asm;
mod assume;
mod isa;

pub use asm::{assemble, assemble_with, parse_hex, AsmError, CallSite, HwLoop, ProgramImage, SourceLine};
pub use assume::*;
pub use isa::*;
