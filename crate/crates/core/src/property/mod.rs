//! Cover properties for leakage paths.
//!
//! A path is cut into sequential blocks, each traversed within one cycle.
//! A block contributes the conjunction (`:`) of its conditional edges'
//! activation conditions; consecutive blocks are joined by `;` around the
//! repeated alive condition of the state element between them.

mod blocks;
mod psl;
mod seq;

pub use blocks::{
    active_condition, alive_condition, alive_range, alive_word, build_sequence, path_property,
    split_blocks, SequentialBlock,
};
pub use psl::{emit_file, emit_psl, emit_seq, parse_psl, parse_psl_file, PslError};
pub use seq::{BoolCond, CondKind, FrozenVar, Origin, PropKind, Property, TemporalSeq};

use serde::Serialize;

use crate::hdl::FlatNetlist;
use crate::ifa::LeakagePath;

/// Manifest row linking a property to its path.
#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub property: String,
    pub path: String,
    pub source: String,
    pub sink: String,
    pub file: String,
    pub blocks: usize,
}

pub fn manifest_entry(netlist: &FlatNetlist, path: &LeakagePath, prop: &Property) -> ManifestEntry {
    ManifestEntry {
        property: prop.name.clone(),
        path: path.id.clone(),
        source: path.source.display(netlist).to_string(),
        sink: path.sink.display(netlist).to_string(),
        file: format!("{}.psl", path.id),
        blocks: split_blocks(path).len(),
    }
}
