use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hdl::{FlatNetlist, SignalId};

/// `signal[lsb + width - 1 : lsb]`; for memories the range is within a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BitRange {
    pub signal: SignalId,
    pub lsb: u32,
    pub width: u32,
}

impl BitRange {
    pub fn full(netlist: &FlatNetlist, signal: SignalId) -> Self {
        BitRange {
            signal,
            lsb: 0,
            width: netlist.signal(signal).width,
        }
    }

    pub fn msb(&self) -> u32 {
        self.lsb + self.width - 1
    }

    pub fn overlaps(&self, other: &BitRange) -> bool {
        self.signal == other.signal
            && self.lsb < other.lsb + other.width
            && other.lsb < self.lsb + self.width
    }

    pub fn contains(&self, other: &BitRange) -> bool {
        self.signal == other.signal
            && self.lsb <= other.lsb
            && other.lsb + other.width <= self.lsb + self.width
    }

    /// Bit mask of this range within its signal.
    pub fn mask(&self) -> u64 {
        crate::hdl::netlist::mask(self.width) << self.lsb
    }

    pub fn display<'a>(&'a self, netlist: &'a FlatNetlist) -> impl fmt::Display + 'a {
        RangeDisplay {
            range: self,
            netlist,
        }
    }
}

struct RangeDisplay<'a> {
    range: &'a BitRange,
    netlist: &'a FlatNetlist,
}

impl fmt::Display for RangeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.netlist.signal(self.range.signal);
        if self.range.lsb == 0 && self.range.width == s.width {
            write!(f, "{}", s.name)
        } else if self.range.width == 1 {
            write!(f, "{}[{}]", s.name, self.range.lsb)
        } else {
            write!(f, "{}[{}:{}]", s.name, self.range.msb(), self.range.lsb)
        }
    }
}

/// One labelled signal in the configuration file.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub signal: String,
    /// `[msb, lsb]`; the whole signal when absent.
    #[serde(default)]
    pub bits: Option<[u32; 2]>,
}

/// Threat model: what is secret, what the attacker sees, and which units may
/// legitimately consume secrets.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct LabelConfig {
    #[serde(default)]
    pub sensitive: Vec<RangeSpec>,
    #[serde(default)]
    pub untrusted: Vec<RangeSpec>,
    /// Mark every top-level output port untrusted in addition to `untrusted`.
    #[serde(default)]
    pub untrusted_outputs: bool,
    #[serde(default)]
    pub declassifiers: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("bit range [{msb}:{lsb}] is out of range for `{signal}`")]
    BadRange { signal: String, msb: u32, lsb: u32 },
    #[error("`{0}` is both a sensitive source and an untrusted sink")]
    Overlap(String),
    #[error("no sensitive sources configured")]
    NoSources,
    #[error("invalid label file: {0}")]
    Parse(String),
}

/// Labels resolved against a netlist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    pub sources: Vec<BitRange>,
    pub sinks: Vec<BitRange>,
    pub declassifiers: BTreeSet<SignalId>,
}

impl LabelConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabelError> {
        toml::from_str(text).map_err(|e| LabelError::Parse(e.to_string()))
    }

    pub fn resolve(&self, netlist: &FlatNetlist) -> Result<Labels, LabelError> {
        let range = |spec: &RangeSpec| -> Result<BitRange, LabelError> {
            let id = netlist
                .lookup(&spec.signal)
                .ok_or_else(|| LabelError::UnknownSignal(spec.signal.clone()))?;
            let w = netlist.signal(id).width;
            match spec.bits {
                None => Ok(BitRange {
                    signal: id,
                    lsb: 0,
                    width: w,
                }),
                Some([msb, lsb]) if lsb <= msb && msb < w => Ok(BitRange {
                    signal: id,
                    lsb,
                    width: msb - lsb + 1,
                }),
                Some([msb, lsb]) => Err(LabelError::BadRange {
                    signal: spec.signal.clone(),
                    msb,
                    lsb,
                }),
            }
        };
        let mut sources = self.sensitive.iter().map(range).collect::<Result<Vec<_>, _>>()?;
        let mut sinks = self.untrusted.iter().map(range).collect::<Result<Vec<_>, _>>()?;
        if self.untrusted_outputs {
            for s in netlist.outputs() {
                let r = BitRange::full(netlist, s.id);
                if !sources.iter().any(|x| x.overlaps(&r)) {
                    sinks.push(r);
                }
            }
        }
        sources.sort();
        sources.dedup();
        sinks.sort();
        sinks.dedup();
        if sources.is_empty() {
            return Err(LabelError::NoSources);
        }
        for s in &sources {
            if let Some(k) = sinks.iter().find(|k| k.overlaps(s)) {
                return Err(LabelError::Overlap(netlist.name(k.signal).to_string()));
            }
        }
        let mut declassifiers = BTreeSet::new();
        for d in &self.declassifiers {
            let id = netlist
                .lookup(d)
                .ok_or_else(|| LabelError::UnknownSignal(d.clone()))?;
            declassifiers.insert(id);
        }
        Ok(Labels {
            sources,
            sinks,
            declassifiers,
        })
    }
}

impl Labels {
    pub fn is_sink(&self, r: &BitRange) -> bool {
        self.sinks.iter().any(|s| s.overlaps(r))
    }

    pub fn sink_for(&self, r: &BitRange) -> Option<BitRange> {
        self.sinks.iter().find(|s| s.overlaps(r)).copied()
    }

    pub fn source_for(&self, r: &BitRange) -> Option<BitRange> {
        self.sources.iter().find(|s| s.overlaps(r)).copied()
    }
}
