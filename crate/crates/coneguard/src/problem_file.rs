//! Line-oriented problem files.
//!
//! ```text
//! vars 1
//! objective (x1-1)^2
//! soc g 2
//! x1
//! x1
//! ```

use std::fmt::Write as _;
use std::path::Path;

use coneguard_core::cone::ConeKind;
use coneguard_core::expr::{parse, ParseError};
use coneguard_core::problem::{ConicBlock, ConicProgram, Equality, ProblemError};

#[derive(Debug, thiserror::Error)]
pub enum ProblemFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ParseError },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn syntax(line: usize, message: impl Into<String>) -> ProblemFileError {
    ProblemFileError::Syntax { line, message: message.into() }
}

/// Non-blank lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then_some((i + 1, l))
        })
        .collect()
}

fn split_keyword(l: &str) -> (&str, &str) {
    match l.find(char::is_whitespace) {
        Some(p) => (&l[..p], l[p..].trim_start()),
        None => (l, ""),
    }
}

pub fn parse_problem(text: &str) -> Result<ConicProgram, ProblemFileError> {
    let lines = content_lines(text);
    let mut it = lines.into_iter().peekable();
    let (l0, first) = it.next().ok_or_else(|| syntax(1, "empty problem file"))?;
    let (kw, rest) = split_keyword(first);
    if kw != "vars" {
        return Err(syntax(l0, "expected `vars <n>`"));
    }
    let n: usize = rest.parse().map_err(|_| syntax(l0, format!("bad variable count `{rest}`")))?;
    if n == 0 {
        return Err(syntax(l0, "need at least one variable"));
    }
    let expr = |line: usize, s: &str| parse(s, n).map_err(|source| ProblemFileError::Expr { line, source });

    let (l1, second) = it.next().ok_or_else(|| syntax(l0, "missing `objective`"))?;
    let (kw, rest) = split_keyword(second);
    if kw != "objective" || rest.is_empty() {
        return Err(syntax(l1, "expected `objective <expr>`"));
    }
    let objective = expr(l1, rest)?;

    let mut equalities = Vec::new();
    let mut blocks = Vec::new();
    while let Some((line, l)) = it.next() {
        let (kw, rest) = split_keyword(l);
        match kw {
            "eq" => {
                if !blocks.is_empty() {
                    return Err(syntax(line, "equalities must precede blocks"));
                }
                let (name, e) = split_keyword(rest);
                if name.is_empty() || e.is_empty() {
                    return Err(syntax(line, "expected `eq <name> <expr>`"));
                }
                equalities.push(Equality { name: name.to_owned(), expr: expr(line, e)? });
            }
            "soc" | "psd" => {
                let mut parts = rest.split_whitespace();
                let (Some(name), Some(m), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(syntax(line, format!("expected `{kw} <name> <m>`")));
                };
                let m: usize = m.parse().map_err(|_| syntax(line, format!("bad dimension `{m}`")))?;
                if m == 0 {
                    return Err(syntax(line, "cone dimension must be positive"));
                }
                let kind = if kw == "soc" { ConeKind::Soc(m) } else { ConeKind::Psd(m) };
                let count = kind.coord_len();
                let mut entries = Vec::with_capacity(count);
                for k in 0..count {
                    let (el, e) = it
                        .next()
                        .ok_or_else(|| syntax(line, format!("block `{name}` needs {count} entries, found {k}")))?;
                    entries.push(expr(el, e)?);
                }
                blocks.push(ConicBlock { name: name.to_owned(), kind, entries });
            }
            _ => return Err(syntax(line, format!("unknown keyword `{kw}`"))),
        }
    }
    Ok(ConicProgram::new(n, objective, equalities, blocks)?)
}

pub fn load_problem(path: &Path) -> Result<ConicProgram, ProblemFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProblemFileError::Io { path: path.display().to_string(), source })?;
    parse_problem(&text)
}

pub fn write_problem(prog: &ConicProgram) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "vars {}", prog.n());
    let _ = writeln!(s, "objective {}", prog.objective());
    for eq in prog.equalities() {
        let _ = writeln!(s, "eq {} {}", eq.name, eq.expr);
    }
    for b in prog.blocks() {
        let kw = match b.kind {
            ConeKind::Soc(_) => "soc",
            ConeKind::Psd(_) => "psd",
        };
        let _ = writeln!(s, "{kw} {} {}", b.name, b.kind.size());
        for e in &b.entries {
            let _ = writeln!(s, "{e}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let p = parse_problem("# header\nvars 1\n\nobjective (x1-1)^2  # f\nsoc g 2\nx1\nx1\n").unwrap();
        assert_eq!(p.n(), 1);
        assert_eq!(p.blocks()[0].kind, ConeKind::Soc(2));
    }

    #[test]
    fn short_block_reports_line() {
        let e = parse_problem("vars 1\nobjective x1\npsd g 2\nx1\nx1\n").unwrap_err();
        assert!(matches!(e, ProblemFileError::Syntax { line: 3, .. }), "{e}");
    }

    #[test]
    fn unknown_variable_reports_line() {
        let e = parse_problem("vars 1\nobjective x2\n").unwrap_err();
        assert!(matches!(e, ProblemFileError::Expr { line: 2, .. }), "{e}");
    }
}
