//! `key: value` reports with a fixed key order.

use std::fmt;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    pub fn append(&mut self, other: Report) -> &mut Self {
        self.lines.extend(other.lines);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.lines {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn pair(p: (f64, f64)) -> String {
    format!("({}, {})", p.0, p.1)
}

pub fn triple(v: &[f64; 3]) -> String {
    format!("({}, {}, {})", v[0], v[1], v[2])
}
