//! Mapping witness fetch streams back to program lines.

use serde::Serialize;

use crate::hdl::FlatNetlist;
use crate::mc::{ReplayError, Witness};
use crate::software::{CoreInterface, ProgramImage};

/// One fetch cycle of a witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Attribution {
    pub cycle: usize,
    pub address: u32,
    /// Word on the fetch port in that cycle.
    pub word: u32,
    /// Source line, when the fetched word is the image word at `address`.
    pub line: Option<usize>,
    pub text: Option<String>,
}

impl Attribution {
    pub fn is_mapped(&self) -> bool {
        self.line.is_some()
    }
}

/// `(address, word)` on the fetch port in every cycle of the witness.
pub fn fetch_stream(design: &FlatNetlist, iface: &CoreInterface, witness: &Witness) -> Result<Vec<(u32, u32)>, ReplayError> {
    let addr = design
        .lookup(&iface.fetch_addr)
        .ok_or_else(|| ReplayError::UnknownInput(iface.fetch_addr.clone()))?;
    let data = design
        .lookup(&iface.fetch_data)
        .ok_or_else(|| ReplayError::UnknownInput(iface.fetch_data.clone()))?;
    Ok(witness
        .trace(design, &[addr, data])?
        .into_iter()
        .map(|v| (v[0] as u32, v[1] as u32))
        .collect())
}

/// Source lines fetched by the witness, in cycle order.
///
/// A cycle maps to a line only when the fetched word is the program's word
/// at that address; with a free program memory (modes None and Legal) the
/// fetched words usually differ and stay unmapped.
pub fn attribute_witness(
    design: &FlatNetlist,
    iface: &CoreInterface,
    witness: &Witness,
    program: &ProgramImage,
) -> Result<Vec<Attribution>, ReplayError> {
    Ok(fetch_stream(design, iface, witness)?
        .into_iter()
        .enumerate()
        .map(|(cycle, (address, word))| {
            let src = (program.words.get(&address) == Some(&word))
                .then(|| program.source(address))
                .flatten();
            Attribution {
                cycle,
                address,
                word,
                line: src.map(|s| s.line),
                text: src.map(|s| s.text.clone()),
            }
        })
        .collect())
}
