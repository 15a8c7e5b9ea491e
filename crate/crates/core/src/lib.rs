//! Hardware/software confidentiality co-verification.
//!
//! The crate turns an RTL design into leakage paths from sensitive sources to
//! attacker-observable sinks, compiles every path into a cover property over
//! per-cycle activation conditions, constrains the design with assumptions
//! derived from a concrete program, and decides for every path whether the
//! program can activate it.
//!
//! * [`hdl`]: Verilog-subset parser, elaborator and simulator.
//! * [`ifa`]: label configuration and leakage-path enumeration.
//! * [`property`]: sequential blocks, activation conditions, SERE/PSL.
//! * [`software`]: fixture ISA, assembler and assumption generation.
//! * [`mc`]: bit-blasting, monitors, BMC, k-induction, explicit-state oracle.
//! * [`pipeline`]: end-to-end runs, verification modes and reports.

pub mod hdl;
pub mod ifa;
pub mod mc;
pub mod property;
pub mod fixtures;
pub mod software;
pub mod pipeline;
