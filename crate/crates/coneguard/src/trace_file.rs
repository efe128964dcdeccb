//! Text format for AKKT traces. One record per `k` line:
//!
//! ```text
//! k 3
//! x 1.0000000000000000e0
//! lambda
//! mu g 0.0000000000000000e0 0.0000000000000000e0
//! alpha h 2.5000000000000000e-1
//! ```
//!
//! Every block appears once per record, as `mu` (cone coordinates, upper
//! triangle for PSD) or `alpha` (reduced coefficient).

use std::fmt::Write as _;
use std::path::Path;

use coneguard_core::akkt::{AkktError, AkktRecord, AkktTrace, BlockMultiplier};
use coneguard_core::problem::{ConeValue, ConicProgram};

#[derive(Debug, thiserror::Error)]
pub enum TraceFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] AkktError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn syntax(line: usize, message: impl Into<String>) -> TraceFileError {
    TraceFileError::Syntax { line, message: message.into() }
}

/// 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn reals(line: usize, parts: &[&str]) -> Result<Vec<f64>, TraceFileError> {
    parts.iter().map(|p| p.parse::<f64>().map_err(|_| syntax(line, format!("bad number `{p}`")))).collect()
}

struct Partial {
    line: usize,
    k: usize,
    x: Option<Vec<f64>>,
    lambda: Option<Vec<f64>>,
    multipliers: Vec<Option<BlockMultiplier>>,
}

impl Partial {
    fn finish(self, prog: &ConicProgram) -> Result<AkktRecord, TraceFileError> {
        let x = self.x.ok_or_else(|| syntax(self.line, format!("record {} has no `x` line", self.k)))?;
        let lambda = match self.lambda {
            Some(l) => l,
            None if prog.equalities().is_empty() => Vec::new(),
            None => return Err(syntax(self.line, format!("record {} has no `lambda` line", self.k))),
        };
        let mut multipliers = Vec::with_capacity(self.multipliers.len());
        for (m, b) in self.multipliers.into_iter().zip(prog.blocks()) {
            multipliers.push(m.ok_or_else(|| syntax(self.line, format!("record {} has no multiplier for `{}`", self.k, b.name)))?);
        }
        Ok(AkktRecord { k: self.k, x, lambda, multipliers })
    }
}

pub fn parse_trace(text: &str, prog: &ConicProgram) -> Result<AkktTrace, TraceFileError> {
    let mut records = Vec::new();
    let mut cur: Option<Partial> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts[0] == "k" {
            if let Some(p) = cur.take() {
                records.push(p.finish(prog)?);
            }
            let [_, k] = parts[..] else { return Err(syntax(line, "expected `k <index>`")) };
            let k = k.parse().map_err(|_| syntax(line, format!("bad index `{k}`")))?;
            cur = Some(Partial { line, k, x: None, lambda: None, multipliers: vec![None; prog.blocks().len()] });
            continue;
        }
        let p = cur.as_mut().ok_or_else(|| syntax(line, "expected `k <index>` first"))?;
        match parts[0] {
            "x" => p.x = Some(reals(line, &parts[1..])?),
            "lambda" => p.lambda = Some(reals(line, &parts[1..])?),
            kw @ ("mu" | "alpha") => {
                let name = parts.get(1).ok_or_else(|| syntax(line, format!("expected `{kw} <block> …`")))?;
                let j = prog.block_index(name).ok_or_else(|| syntax(line, format!("unknown block `{name}`")))?;
                if p.multipliers[j].is_some() {
                    return Err(syntax(line, format!("second multiplier for `{name}`")));
                }
                let vals = reals(line, &parts[2..])?;
                p.multipliers[j] = Some(if kw == "mu" {
                    let kind = prog.blocks()[j].kind;
                    if vals.len() != kind.coord_len() {
                        return Err(syntax(line, format!("`{name}` needs {} values, got {}", kind.coord_len(), vals.len())));
                    }
                    BlockMultiplier::Cone(ConeValue::from_flat(kind, &vals).map_err(|e| syntax(line, e.to_string()))?)
                } else {
                    let [a] = vals[..] else { return Err(syntax(line, "`alpha` takes one value")) };
                    BlockMultiplier::Ray(a)
                });
            }
            other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
        }
    }
    if let Some(p) = cur.take() {
        records.push(p.finish(prog)?);
    }
    let trace = AkktTrace { records };
    trace.validate(prog)?;
    Ok(trace)
}

pub fn load_trace(path: &Path, prog: &ConicProgram) -> Result<AkktTrace, TraceFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| TraceFileError::Io { path: path.display().to_string(), source })?;
    parse_trace(&text, prog)
}

fn push_reals(s: &mut String, vals: &[f64]) {
    for v in vals {
        s.push(' ');
        s.push_str(&fmt_real(*v));
    }
}

pub fn write_trace(trace: &AkktTrace, prog: &ConicProgram) -> String {
    let mut s = String::new();
    for r in &trace.records {
        let _ = writeln!(s, "k {}", r.k);
        s.push('x');
        push_reals(&mut s, &r.x);
        s.push_str("\nlambda");
        push_reals(&mut s, &r.lambda);
        s.push('\n');
        for (m, b) in r.multipliers.iter().zip(prog.blocks()) {
            match m {
                BlockMultiplier::Cone(v) => {
                    let _ = write!(s, "mu {}", b.name);
                    push_reals(&mut s, &v.to_flat());
                }
                BlockMultiplier::Ray(a) => {
                    let _ = write!(s, "alpha {} {}", b.name, fmt_real(*a));
                }
            }
            s.push('\n');
        }
    }
    s
}
