//! Cover witnesses: input traces that drive a design into a match.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hdl::{FlatNetlist, Expr, SignalId, Simulator};
use crate::property::Property;

use super::oracle::Matcher;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// Frozen variable values as `(index, value)`.
    pub frozen: Vec<(u32, u64)>,
    /// Input signal names, one column per signal.
    pub signals: Vec<String>,
    /// Per cycle, the value of every signal in `signals`.
    pub cycles: Vec<Vec<u64>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("assumption {index} fails in cycle {cycle}")]
    Assumption { index: usize, cycle: usize },
    #[error("the trace does not end in a match of the cover sequence")]
    NoMatch,
    #[error("malformed witness table: {0}")]
    Table(String),
}

impl Witness {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Whitespace-separated table: a header of signal names, then one row of
    /// hex values per cycle. Frozen values go in `# frozen f<i>=<hex>` lines.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (i, v) in &self.frozen {
            out.push_str(&format!("# frozen f{i}={v:x}\n"));
        }
        out.push_str("cycle");
        for s in &self.signals {
            out.push(' ');
            out.push_str(s);
        }
        out.push('\n');
        for (c, row) in self.cycles.iter().enumerate() {
            out.push_str(&c.to_string());
            for v in row {
                out.push_str(&format!(" {v:x}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Witness, ReplayError> {
        let bad = |m: &str| ReplayError::Table(m.to_string());
        let mut frozen = Vec::new();
        let mut signals = None;
        let mut cycles = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix("# frozen ") {
                let (name, val) = rest.split_once('=').ok_or_else(|| bad(line))?;
                let idx = name
                    .trim()
                    .strip_prefix('f')
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| bad(line))?;
                let v = u64::from_str_radix(val.trim(), 16).map_err(|_| bad(line))?;
                frozen.push((idx, v));
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            match &signals {
                None => {
                    if cols.next() != Some("cycle") {
                        return Err(bad("header must start with `cycle`"));
                    }
                    signals = Some(cols.map(str::to_string).collect::<Vec<_>>());
                }
                Some(names) => {
                    cols.next();
                    let row = cols
                        .map(|c| u64::from_str_radix(c, 16))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad(line))?;
                    if row.len() != names.len() {
                        return Err(bad(line));
                    }
                    cycles.push(row);
                }
            }
        }
        Ok(Witness {
            frozen,
            signals: signals.ok_or_else(|| bad("missing header"))?,
            cycles,
        })
    }

    fn resolve(&self, netlist: &FlatNetlist) -> Result<Vec<SignalId>, ReplayError> {
        self.signals
            .iter()
            .map(|n| netlist.lookup(n).ok_or_else(|| ReplayError::UnknownInput(n.clone())))
            .collect()
    }

    /// Values of `observe` in every cycle of the trace, after the inputs of
    /// that cycle have settled.
    pub fn trace(&self, netlist: &FlatNetlist, observe: &[SignalId]) -> Result<Vec<Vec<u64>>, ReplayError> {
        let ids = self.resolve(netlist)?;
        let mut sim = Simulator::new(netlist);
        let n = self.frozen.iter().map(|&(i, _)| i as usize + 1).max().unwrap_or(0);
        let mut frozen = vec![0; n];
        for &(i, v) in &self.frozen {
            frozen[i as usize] = v;
        }
        sim.set_frozen(frozen);
        let mut out = Vec::with_capacity(self.cycles.len());
        for row in &self.cycles {
            let inputs: Vec<(SignalId, u64)> = ids.iter().copied().zip(row.iter().copied()).collect();
            sim.apply(&inputs);
            out.push(observe.iter().map(|&id| sim.value(id)).collect());
            sim.tick();
        }
        Ok(out)
    }

    /// Runs the trace on the simulator: every assumption must hold in every
    /// cycle and the cover sequence must complete a match in the last cycle.
    pub fn replay(&self, netlist: &FlatNetlist, assumptions: &[Expr], cover: &Property) -> Result<(), ReplayError> {
        let ids = self.resolve(netlist)?;
        let mut sim = Simulator::new(netlist);
        let mut frozen = vec![0; cover.frozen.iter().map(|f| f.index as usize + 1).max().unwrap_or(0)];
        for &(i, v) in &self.frozen {
            if let Some(slot) = frozen.get_mut(i as usize) {
                *slot = v;
            }
        }
        sim.set_frozen(frozen);
        let mut matcher = Matcher::new(&cover.body);
        let mut matched = false;
        for (cycle, row) in self.cycles.iter().enumerate() {
            let inputs: Vec<(SignalId, u64)> = ids.iter().copied().zip(row.iter().copied()).collect();
            sim.apply(&inputs);
            if let Some(index) = assumptions.iter().position(|a| a.eval(&sim) == 0) {
                return Err(ReplayError::Assumption { index, cycle });
            }
            matched = matcher.step(&sim);
            sim.tick();
        }
        if matched {
            Ok(())
        } else {
            Err(ReplayError::NoMatch)
        }
    }
}
