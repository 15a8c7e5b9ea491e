//! Static information-flow analysis: which assignment chains can carry
//! sensitive bits to untrusted observation points.
//!
//! [`EdgeGraph::build`] turns every flattened assignment into bit-range flow
//! edges, [`enumerate_paths`] lists the simple source-to-sink paths through
//! them, and [`TaintSim`] tracks the same flows dynamically for validation.

mod edges;
mod labels;
mod paths;
mod taint;

pub use edges::{flows, AssignmentEdge, EdgeAlt, EdgeGraph, EdgeRecord, Flow};
pub use labels::{BitRange, LabelConfig, LabelError, Labels, RangeSpec};
pub use paths::{enumerate_paths, rank_paths, LeakagePath, Limits, PathRecord, PathReport, PathSet};
pub use taint::TaintSim;
