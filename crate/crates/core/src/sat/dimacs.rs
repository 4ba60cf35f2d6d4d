use std::fmt::Write;

use thiserror::Error;

use super::types::{CnfProblem, Lit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("literal {lit} exceeds declared variable count {num_vars}")]
    VarOutOfRange { lit: i64, num_vars: usize },
}

/// Reads a DIMACS CNF file. `c interface v1 v2 ... 0` comment lines mark
/// interface variables; without them every variable is interface.
pub fn parse_dimacs(text: &str) -> Result<CnfProblem, DimacsError> {
    let mut problem: Option<CnfProblem> = None;
    let mut interface: Vec<usize> = Vec::new();
    let mut saw_interface = false;
    let mut current: Vec<Lit> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        let syntax = |msg: &str| DimacsError::Syntax {
            line: ln + 1,
            msg: msg.to_string(),
        };
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            let rest = rest.trim();
            if let Some(vars) = rest.strip_prefix("interface") {
                saw_interface = true;
                for tok in vars.split_whitespace() {
                    let v: usize = tok.parse().map_err(|_| syntax("bad interface variable"))?;
                    if v != 0 {
                        interface.push(v - 1);
                    }
                }
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 3 || toks[0] != "cnf" {
                return Err(syntax("expected `p cnf <vars> <clauses>`"));
            }
            let n: usize = toks[1].parse().map_err(|_| syntax("bad variable count"))?;
            toks[2].parse::<usize>().map_err(|_| syntax("bad clause count"))?;
            problem = Some(CnfProblem::new(n));
            continue;
        }
        let p = problem.as_mut().ok_or(DimacsError::MissingHeader)?;
        for tok in line.split_whitespace() {
            let d: i64 = tok.parse().map_err(|_| syntax("bad literal"))?;
            if d == 0 {
                p.clauses.push(std::mem::take(&mut current));
            } else {
                if d.unsigned_abs() as usize > p.num_vars {
                    return Err(DimacsError::VarOutOfRange {
                        lit: d,
                        num_vars: p.num_vars,
                    });
                }
                current.push(Lit::from_dimacs(d));
            }
        }
    }
    let mut p = problem.ok_or(DimacsError::MissingHeader)?;
    if !current.is_empty() {
        p.clauses.push(current);
    }
    if saw_interface {
        for v in interface {
            if v < p.num_vars {
                p.interface[v] = true;
            }
        }
    } else {
        p.interface = vec![true; p.num_vars];
    }
    Ok(p)
}

pub fn write_dimacs(p: &CnfProblem) -> String {
    let mut s = String::new();
    let iface: Vec<String> = (0..p.num_vars)
        .filter(|&v| p.interface.get(v).copied().unwrap_or(false))
        .map(|v| (v + 1).to_string())
        .collect();
    let _ = writeln!(s, "c interface {} 0", iface.join(" "));
    let _ = writeln!(s, "p cnf {} {}", p.num_vars, p.clauses.len());
    for c in &p.clauses {
        for l in c {
            let _ = write!(s, "{} ", l.dimacs());
        }
        s.push_str("0\n");
    }
    s
}
