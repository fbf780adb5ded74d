//! Pass/fail bookkeeping for the acceptance run and access to the bundled
//! example models.
//!
//! The package name sorts after every other workspace member, so
//! `cargo test --workspace` reaches the acceptance binary last.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use slidecross::model::{load_model, Model, ModelError};

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn example_model(name: &str, params: &[(&str, f64)]) -> Result<Model, ModelError> {
    let overrides: BTreeMap<String, f64> =
        params.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    load_model(&models_dir().join(format!("{name}.model")), &overrides)
}

/// One sub-check of a criterion.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Criterion {
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn check(&mut self, label: &str, pass: bool, detail: impl Into<String>) -> bool {
        self.checks.push(Check { label: label.into(), pass, detail: detail.into() });
        pass
    }

    /// `|got − want| ≤ tol`.
    pub fn close(&mut self, label: &str, got: f64, want: f64, tol: f64) -> bool {
        let err = (got - want).abs();
        self.check(label, err <= tol, format!("{got:.12e} vs {want:.12e}, err {err:.2e} (tol {tol:.0e})"))
    }

    /// `|got − want| ≤ tol·|want|`.
    pub fn close_rel(&mut self, label: &str, got: f64, want: f64, tol: f64) -> bool {
        let rel = (got - want).abs() / want.abs();
        self.check(label, rel <= tol, format!("{got:.12e} vs {want:.12e}, rel {rel:.2e} (tol {tol:.0e})"))
    }

    /// Records an error from the library as a failed check.
    pub fn fail(&mut self, label: &str, err: impl std::fmt::Display) -> bool {
        self.check(label, false, format!("error: {err}"))
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Default)]
pub struct Report {
    rows: Vec<(u32, String, Criterion)>,
}

impl Report {
    /// Runs one criterion; an error aborts it and counts as a failed check.
    pub fn run<E: std::fmt::Display>(
        &mut self,
        id: u32,
        name: &str,
        f: impl FnOnce(&mut Criterion) -> Result<(), E>,
    ) {
        let mut c = Criterion::default();
        if let Err(e) = f(&mut c) {
            c.fail("aborted", e);
        }
        println!("{}", render_row(id, name, &c));
        self.rows.push((id, name.to_string(), c));
    }

    pub fn failures(&self) -> Vec<u32> {
        self.rows.iter().filter(|r| !r.2.passed()).map(|r| r.0).collect()
    }
}

pub fn render_row(id: u32, name: &str, c: &Criterion) -> String {
    let mut s = format!("{} {id:>2} {name}", if c.passed() { "PASS" } else { "FAIL" });
    for ch in &c.checks {
        let mark = if ch.pass { "ok  " } else { "FAIL" };
        let _ = write!(s, "\n        {mark} {}: {}", ch.label, ch.detail);
    }
    s
}
