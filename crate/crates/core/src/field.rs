use std::fmt;

use crate::error::{Error, Result};
use crate::expr::Expr;

/// One of the four open quadrants of the `(x1, x2)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignPair {
    pub s1: i8,
    pub s2: i8,
}

impl SignPair {
    pub const PP: SignPair = SignPair { s1: 1, s2: 1 };
    pub const PM: SignPair = SignPair { s1: 1, s2: -1 };
    pub const MP: SignPair = SignPair { s1: -1, s2: 1 };
    pub const MM: SignPair = SignPair { s1: -1, s2: -1 };
    /// Storage order used throughout the crate.
    pub const ALL: [SignPair; 4] = [Self::PP, Self::PM, Self::MP, Self::MM];

    pub fn new(s1: i8, s2: i8) -> Option<SignPair> {
        match (s1, s2) {
            (1 | -1, 1 | -1) => Some(SignPair { s1, s2 }),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match (self.s1, self.s2) {
            (1, 1) => 0,
            (1, _) => 1,
            (_, 1) => 2,
            _ => 3,
        }
    }

    pub fn label(self) -> &'static str {
        ["++", "+-", "-+", "--"][self.index()]
    }

    pub fn from_label(label: &str) -> Option<SignPair> {
        Self::ALL.into_iter().find(|s| s.label() == label)
    }

    pub fn f1(self) -> f64 {
        f64::from(self.s1)
    }

    pub fn f2(self) -> f64 {
        f64::from(self.s2)
    }
}

impl fmt::Display for SignPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Sign vector of `(x1, x2)`; a zero entry means the point lies on that
/// switching plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stratum {
    pub s1: i8,
    pub s2: i8,
}

impl Stratum {
    pub const ORIGIN: Stratum = Stratum { s1: 0, s2: 0 };

    pub fn codimension(self) -> usize {
        usize::from(self.s1 == 0) + usize::from(self.s2 == 0)
    }

    pub fn quadrant(self) -> Option<SignPair> {
        SignPair::new(self.s1, self.s2)
    }

    pub fn label(self) -> String {
        let c = |s: i8| match s {
            1 => '+',
            -1 => '-',
            _ => '0',
        };
        format!("{}{}", c(self.s1), c(self.s2))
    }
}

impl From<SignPair> for Stratum {
    fn from(s: SignPair) -> Stratum {
        Stratum { s1: s.s1, s2: s.s2 }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Σ{}", self.label())
    }
}

fn sign_with_tol(x: f64, tol: f64) -> i8 {
    if x.abs() <= tol {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

pub fn stratum_of(p: &[f64; 3], tol: f64) -> Stratum {
    Stratum {
        s1: sign_with_tol(p[0], tol),
        s2: sign_with_tol(p[1], tol),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothField3 {
    pub comps: [Expr; 3],
}

impl SmoothField3 {
    pub fn new(c1: Expr, c2: Expr, c3: Expr) -> Self {
        SmoothField3 { comps: [c1, c2, c3] }
    }

    pub fn constant(v: [f64; 3]) -> Self {
        SmoothField3 {
            comps: v.map(Expr::constant),
        }
    }

    pub fn eval(&self, p: &[f64; 3]) -> Result<[f64; 3]> {
        Ok([
            self.comps[0].eval(p)?,
            self.comps[1].eval(p)?,
            self.comps[2].eval(p)?,
        ])
    }

    /// Value of the field when none of its components depends on the state.
    pub fn constant_value(&self) -> Option<[f64; 3]> {
        if self.comps.iter().all(Expr::is_constant) {
            self.eval(&[0.0; 3]).ok()
        } else {
            None
        }
    }
}

impl fmt::Display for SmoothField3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, {}", self.comps[0], self.comps[1], self.comps[2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseField {
    fields: [SmoothField3; 4],
}

impl PiecewiseField {
    /// Fields in the order `++, +-, -+, --`.
    pub fn new(fields: [SmoothField3; 4]) -> Self {
        PiecewiseField { fields }
    }

    pub fn from_constants(values: [[f64; 3]; 4]) -> Self {
        PiecewiseField {
            fields: values.map(SmoothField3::constant),
        }
    }

    pub fn get(&self, s: SignPair) -> &SmoothField3 {
        &self.fields[s.index()]
    }

    pub fn eval(&self, s: SignPair, p: &[f64; 3]) -> Result<[f64; 3]> {
        self.get(s).eval(p)
    }

    /// Evaluate all four quadrant fields at `p`, in storage order.
    pub fn eval_all(&self, p: &[f64; 3]) -> Result<[[f64; 3]; 4]> {
        Ok([
            self.fields[0].eval(p)?,
            self.fields[1].eval(p)?,
            self.fields[2].eval(p)?,
            self.fields[3].eval(p)?,
        ])
    }

    pub fn is_constant(&self) -> bool {
        self.fields.iter().all(|f| f.constant_value().is_some())
    }

    pub fn constants(&self) -> Result<[[f64; 3]; 4]> {
        let mut out = [[0.0; 3]; 4];
        for s in SignPair::ALL {
            out[s.index()] = self
                .get(s)
                .constant_value()
                .ok_or(Error::NonConstant(s.label()))?;
        }
        Ok(out)
    }

    /// Freeze every quadrant field at `p0`.
    pub fn frozen_at(&self, p0: &[f64; 3]) -> Result<PiecewiseField> {
        Ok(PiecewiseField::from_constants(self.eval_all(p0)?))
    }
}

impl fmt::Display for PiecewiseField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in SignPair::ALL {
            writeln!(f, "field {} : {}", s.label(), self.get(s))?;
        }
        Ok(())
    }
}

/// Smoothed sign function used by the regularization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transition {
    /// `max(-1, min(1, t))`.
    #[default]
    ClampedIdentity,
    /// `(3t - t³)/2` on `[-1, 1]`, saturated outside; C¹ at `±1`.
    ClampedCubic,
}

impl Transition {
    pub fn eval(self, t: f64) -> f64 {
        if t <= -1.0 {
            return -1.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match self {
            Transition::ClampedIdentity => t,
            Transition::ClampedCubic => 0.5 * t * (3.0 - t * t),
        }
    }

    /// Derivative; the identity's one-sided value 1 is used at `t = ±1`.
    pub fn deriv(self, t: f64) -> f64 {
        if t.abs() > 1.0 {
            return 0.0;
        }
        match self {
            Transition::ClampedIdentity => 1.0,
            Transition::ClampedCubic => 1.5 * (1.0 - t * t),
        }
    }

    /// Inverse on `[-1, 1]`; values outside are clamped first.
    pub fn inverse(self, u: f64) -> f64 {
        let u = u.clamp(-1.0, 1.0);
        match self {
            Transition::ClampedIdentity => u,
            // Trigonometric root of t³ - 3t + 2u = 0 lying in [-1, 1].
            Transition::ClampedCubic => 2.0 * (u.asin() / 3.0).sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transition::ClampedIdentity => "clamped-identity",
            Transition::ClampedCubic => "clamped-cubic",
        }
    }
}

impl std::str::FromStr for Transition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamped-identity" | "identity" => Ok(Transition::ClampedIdentity),
            "clamped-cubic" | "cubic" => Ok(Transition::ClampedCubic),
            _ => Err(Error::InvalidArgument(format!("unknown transition function `{s}`"))),
        }
    }
}

/// Weight of quadrant `s` in the double regularization, given the already
/// transformed switching variables `u = φ(x1/ε)` and `v = φ(x2/η)`.
pub fn convex_weight(s: SignPair, u: f64, v: f64) -> f64 {
    (1.0 + s.f1() * u) * (1.0 + s.f2() * v) / 4.0
}
