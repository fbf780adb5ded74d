//! Line-oriented model files.
//!
//! ```text
//! # comment
//! param alpha = -6/100
//! field ++ : 5/36 - alpha/4, -1/18, 1
//! field +- : ...
//! ```
//!
//! Every quadrant `++`, `+-`, `-+`, `--` must be defined exactly once.
//! Parameters are constant expressions and may refer to parameters declared
//! above them; field expressions may use any parameter in the file.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::expr::{parse_expression_with, Expr, ParseError};
use crate::field::{PiecewiseField, SignPair, SmoothField3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expression {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: quadrant {label} defined twice")]
    DuplicateQuadrant { line: usize, label: String },
    #[error("line {line}: parameter `{name}` defined twice")]
    DuplicateParam { line: usize, name: String },
    #[error("missing field for quadrant {0}")]
    MissingQuadrant(&'static str),
    #[error("cannot read model file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub field: PiecewiseField,
    pub params: BTreeMap<String, f64>,
}

pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    parse_model_with(text, &BTreeMap::new())
}

pub fn load_model(path: &Path, overrides: &BTreeMap<String, f64>) -> Result<Model, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    parse_model_with(&text, overrides)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

const RESERVED: [&str; 4] = ["x1", "x2", "x3", "sqrt"];

/// Parse a model, replacing declared parameter values with `overrides`.
/// Overrides for parameters the file does not declare are added as well.
pub fn parse_model_with(
    text: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<Model, ModelError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();

    let mut params = BTreeMap::new();
    for &(line, l) in &lines {
        let Some(rest) = keyword(l, "param") else { continue };
        let (name, value) = rest.split_once('=').ok_or_else(|| ModelError::Syntax {
            line,
            message: "expected `param <name> = <value>`".into(),
        })?;
        let name = name.trim();
        if !is_identifier(name) || RESERVED.contains(&name) {
            return Err(ModelError::Syntax {
                line,
                message: format!("invalid parameter name `{name}`"),
            });
        }
        if params.contains_key(name) {
            return Err(ModelError::DuplicateParam {
                line,
                name: name.to_string(),
            });
        }
        let expr = parse_expression_with(value, &params)
            .map_err(|source| ModelError::Expression { line, source })?;
        let v = constant_value(&expr).ok_or_else(|| ModelError::Syntax {
            line,
            message: format!("parameter `{name}` must be a finite constant"),
        })?;
        let v = overrides.get(name).copied().unwrap_or(v);
        params.insert(name.to_string(), v);
    }
    for (k, v) in overrides {
        params.entry(k.clone()).or_insert(*v);
    }

    let mut fields: [Option<SmoothField3>; 4] = Default::default();
    for &(line, l) in &lines {
        if keyword(l, "param").is_some() {
            continue;
        }
        let Some(rest) = keyword(l, "field") else {
            let word = l.split_whitespace().next().unwrap_or(l);
            return Err(ModelError::Syntax {
                line,
                message: format!("unknown statement `{word}`"),
            });
        };
        let (label, body) = rest.split_once(':').ok_or_else(|| ModelError::Syntax {
            line,
            message: "expected `field <quadrant> : <expr>, <expr>, <expr>`".into(),
        })?;
        let label = label.trim();
        let s = SignPair::from_label(label).ok_or_else(|| ModelError::Syntax {
            line,
            message: format!("unknown quadrant `{label}`; expected ++, +-, -+ or --"),
        })?;
        if fields[s.index()].is_some() {
            return Err(ModelError::DuplicateQuadrant {
                line,
                label: label.to_string(),
            });
        }
        let parts: Vec<&str> = body.split(',').collect();
        if parts.len() != 3 {
            return Err(ModelError::Syntax {
                line,
                message: format!("expected 3 components, found {}", parts.len()),
            });
        }
        let mut comps = Vec::with_capacity(3);
        for part in parts {
            comps.push(
                parse_expression_with(part, &params)
                    .map_err(|source| ModelError::Expression { line, source })?,
            );
        }
        let c3 = comps.pop().unwrap();
        let c2 = comps.pop().unwrap();
        let c1 = comps.pop().unwrap();
        fields[s.index()] = Some(SmoothField3::new(c1, c2, c3));
    }

    let mut out = Vec::with_capacity(4);
    for (s, f) in SignPair::ALL.iter().zip(fields) {
        out.push(f.ok_or(ModelError::MissingQuadrant(s.label()))?);
    }
    let [a, b, c, d]: [SmoothField3; 4] = out.try_into().expect("four quadrants");
    Ok(Model {
        field: PiecewiseField::new([a, b, c, d]),
        params,
    })
}

fn keyword<'a>(line: &'a str, word: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(word)?;
    rest.starts_with(char::is_whitespace).then_some(rest)
}

fn constant_value(e: &Expr) -> Option<f64> {
    if !e.is_constant() {
        return None;
    }
    e.eval(&[0.0; 3]).ok().filter(|v| v.is_finite())
}
