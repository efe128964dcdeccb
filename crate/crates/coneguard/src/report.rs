//! Machine-readable reports: a fenced block of `key value` lines inside the
//! normal output stream.

use std::fmt::{self, Display};

pub const BEGIN: &str = "---REPORT-BEGIN---";
pub const END: &str = "---REPORT-END---";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub command: String,
    pub entries: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("no `{BEGIN}` marker")]
    MissingBegin,
    #[error("no `{END}` marker")]
    MissingEnd,
    #[error("report line {line}: {message}")]
    Syntax { line: usize, message: String },
}

fn clean_key(k: &str) -> String {
    let k: String = k.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
    if k.is_empty() {
        "_".to_owned()
    } else {
        k
    }
}

fn clean_value(v: &str) -> String {
    v.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: clean_value(command), entries: Vec::new() }
    }

    /// Keys lose their whitespace and values are collapsed onto one line,
    /// so that every pushed entry survives a render/parse cycle.
    pub fn push(&mut self, key: impl AsRef<str>, value: impl Display) {
        self.entries.push((clean_key(key.as_ref()), clean_value(&value.to_string())));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(BEGIN);
        s.push('\n');
        s.push_str("command ");
        s.push_str(&self.command);
        s.push('\n');
        for (k, v) in &self.entries {
            s.push_str(k);
            if !v.is_empty() {
                s.push(' ');
                s.push_str(v);
            }
            s.push('\n');
        }
        s.push_str(END);
        s.push('\n');
        s
    }

    /// Finds the fenced block in `stream` and parses it.
    pub fn parse(stream: &str) -> Result<Report, ReportError> {
        let mut lines = stream.lines().enumerate().skip_while(|(_, l)| l.trim_end() != BEGIN);
        lines.next().ok_or(ReportError::MissingBegin)?;
        let mut report: Option<Report> = None;
        for (i, l) in lines {
            let line = i + 1;
            if l.trim_end() == END {
                return report.ok_or(ReportError::Syntax { line, message: "empty report".to_owned() });
            }
            let (k, v) = match l.find(' ') {
                Some(p) => (&l[..p], &l[p + 1..]),
                None => (l, ""),
            };
            if k.is_empty() {
                return Err(ReportError::Syntax { line, message: "line has no key".to_owned() });
            }
            match &mut report {
                None if k == "command" => report = Some(Report::new(v)),
                None => return Err(ReportError::Syntax { line, message: "first line must be `command`".to_owned() }),
                Some(r) => r.entries.push((k.to_owned(), v.to_owned())),
            }
        }
        Err(ReportError::MissingEnd)
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
