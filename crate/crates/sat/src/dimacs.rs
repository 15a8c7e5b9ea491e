use std::fmt::Write as _;

use thiserror::Error;

use crate::Lit;

/// A formula in conjunctive normal form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
}

impl Cnf {
    /// Standard DIMACS text. Variable `i` is written as `i + 1`.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len()).unwrap();
        for c in &self.clauses {
            for l in c {
                write!(out, "{} ", l.to_dimacs()).unwrap();
            }
            out.push_str("0\n");
        }
        out
    }

    /// Exhaustive check for tiny formulas; `None` when unsatisfiable.
    pub fn brute_force(&self) -> Option<Vec<bool>> {
        assert!(self.num_vars <= 24, "brute force limited to 24 variables");
        'outer: for bits in 0u64..(1u64 << self.num_vars) {
            for c in &self.clauses {
                let sat = c
                    .iter()
                    .any(|l| ((bits >> l.var().index()) & 1 == 1) == l.is_positive());
                if !sat {
                    continue 'outer;
                }
            }
            return Some((0..self.num_vars).map(|i| (bits >> i) & 1 == 1).collect());
        }
        None
    }
}

pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(DimacsError::Syntax {
                    line: idx + 1,
                    message: format!("malformed header `{line}`"),
                });
            }
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| DimacsError::Syntax {
                    line: idx + 1,
                    message: format!("bad number `{s}`"),
                })
            };
            header = Some((parse(parts[2])?, parse(parts[3])?));
            continue;
        }
        let (num_vars, _) = header.ok_or(DimacsError::MissingHeader)?;
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| DimacsError::Syntax {
                line: idx + 1,
                message: format!("bad literal `{tok}`"),
            })?;
            if v == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                if v.unsigned_abs() as usize > num_vars {
                    return Err(DimacsError::Syntax {
                        line: idx + 1,
                        message: format!("literal {v} exceeds declared variable count"),
                    });
                }
                current.push(Lit::from_dimacs(v));
            }
        }
    }
    let (num_vars, _) = header.ok_or(DimacsError::MissingHeader)?;
    if !current.is_empty() {
        clauses.push(current);
    }
    Ok(Cnf { num_vars, clauses })
}
