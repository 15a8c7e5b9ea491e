//! Bundled fixture designs and programs.

/// MiniRV core with its decoder, ALU and AES round unit.
pub const MINIRV: &str = include_str!("../fixtures/minirv/minirv.v");
/// Return-address stack bound to MiniRV's call/return events in mode Stack.
pub const CALLSTACK: &str = include_str!("../fixtures/minirv/callstack.v");
pub const MINIRV_LABELS: &str = include_str!("../fixtures/minirv/labels.toml");
pub const MINIRV_INTERFACE: &str = include_str!("../fixtures/minirv/interface.toml");

/// Copies two key words into data memory through a helper called twice.
pub const NAIVE: &str = include_str!("../fixtures/programs/naive.s");
/// Same task, but the key only ever reaches the AES unit.
pub const PATCHED: &str = include_str!("../fixtures/programs/patched.s");
/// Copies a key word only when a data word equals `TRIGGER`.
pub const TROJAN: &str = include_str!("../fixtures/programs/trojan.s");

/// `out = sel ? secret : pub`.
pub const MUX: &str = include_str!("../fixtures/circuits/mux.v");
pub const MUX_LABELS: &str = include_str!("../fixtures/circuits/mux.toml");
/// Chain of two registers and five conditional hops.
pub const BLOCKS: &str = include_str!("../fixtures/circuits/blocks.v");
pub const BLOCKS_LABELS: &str = include_str!("../fixtures/circuits/blocks.toml");
