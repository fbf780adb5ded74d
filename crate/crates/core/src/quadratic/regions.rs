//! Local bifurcation diagram of
//! `x' = xy − 4/9 − α`, `y' = 2(x−1)(y−1) − 2/9 − β`
//! around the Bogdanov–Takens point `α = β = 0`.

use std::fmt;
use std::str::FromStr;

use crate::codim2::{det, trace, Matrix2};
use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5, Observation};

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// No equilibria.
    I,
    /// Saddle-node curve.
    S,
    /// Saddle and repelling equilibrium.
    II,
    /// Hopf curve.
    H,
    /// Attracting focus inside a repelling cycle.
    III,
    /// Cycle detection was inconclusive; close to the saddle-loop curve.
    C_approx,
    /// Attracting equilibrium, no cycle.
    IV,
    BT_origin,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::I => "I",
            Region::S => "S",
            Region::II => "II",
            Region::H => "H",
            Region::III => "III",
            Region::C_approx => "C_approx",
            Region::IV => "IV",
            Region::BT_origin => "BT_origin",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Region::I,
            Region::S,
            Region::II,
            Region::H,
            Region::III,
            Region::C_approx,
            Region::IV,
            Region::BT_origin,
        ]
        .into_iter()
        .find(|r| r.name() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown region `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOptions {
    /// Tolerance on the discriminant, the trace and the distance to the origin.
    pub tol: f64,
    /// Backward-time window for cycle detection.
    pub window: f64,
    /// Successive return radii closer than this count as recurrent.
    pub recurrence: f64,
    /// Starting ring radius, capped at a tenth of the focus–saddle distance.
    pub ring: f64,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions {
            tol: 1e-12,
            window: 200.0,
            recurrence: 1e-3,
            ring: 1e-2,
        }
    }
}

pub fn discriminant(alpha: f64, beta: f64) -> f64 {
    36.0 * alpha * alpha - 36.0 * alpha * beta + 9.0 * beta * beta - 48.0 * alpha - 48.0 * beta
}

pub fn family_field(alpha: f64, beta: f64, p: &[f64; 2]) -> [f64; 2] {
    let (x, y) = (p[0], p[1]);
    [
        x * y - 4.0 / 9.0 - alpha,
        2.0 * (x - 1.0) * (y - 1.0) - 2.0 / 9.0 - beta,
    ]
}

pub fn family_jacobian(x: f64, y: f64) -> Matrix2 {
    [[y, x], [2.0 * (y - 1.0), 2.0 * (x - 1.0)]]
}

/// Equilibria as `(non-saddle, saddle)`; `None` when `Δ < 0`.
///
/// They solve `x + y = 4/3 + α − β/2`, `xy = 4/9 + α`, and `det J = 2(x − y)`,
/// so the non-saddle is the one with `x > y`.
pub fn family_equilibria(alpha: f64, beta: f64) -> Option<((f64, f64), (f64, f64))> {
    let delta = discriminant(alpha, beta);
    if delta < 0.0 {
        return None;
    }
    let s = 4.0 / 3.0 + alpha - beta / 2.0;
    let r = delta.sqrt() / 6.0;
    let (hi, lo) = ((s + r) / 2.0, (s - r) / 2.0);
    Some(((hi, lo), (lo, hi)))
}

pub fn bifurcation_region(alpha: f64, beta: f64) -> Result<Region> {
    bifurcation_region_with(alpha, beta, &RegionOptions::default())
}

pub fn bifurcation_region_with(alpha: f64, beta: f64, opts: &RegionOptions) -> Result<Region> {
    if !(alpha.abs() <= 0.5 && beta.abs() <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "(α, β) = ({alpha}, {beta}) is outside the local diagram |α|, |β| ≤ 0.5"
        )));
    }
    if alpha.abs() <= opts.tol && beta.abs() <= opts.tol {
        return Ok(Region::BT_origin);
    }
    let delta = discriminant(alpha, beta);
    if delta < -opts.tol {
        return Ok(Region::I);
    }
    if delta.abs() <= opts.tol {
        return Ok(Region::S);
    }
    let (focus, saddle) = family_equilibria(alpha, beta).expect("Δ > 0");
    let j = family_jacobian(focus.0, focus.1);
    debug_assert!(det(&j) > 0.0);
    let tr = trace(&j);
    if tr.abs() <= opts.tol {
        Ok(Region::H)
    } else if tr > 0.0 {
        Ok(Region::II)
    } else {
        detect_cycle(alpha, beta, focus, saddle, opts)
    }
}

/// Backward integration from a small ring around the attracting
/// equilibrium. A repelling cycle attracts in backward time.
fn detect_cycle(
    alpha: f64,
    beta: f64,
    focus: (f64, f64),
    saddle: (f64, f64),
    opts: &RegionOptions,
) -> Result<Region> {
    let dist = (focus.0 - saddle.0).hypot(focus.1 - saddle.1);
    let r0 = opts.ring.min(0.1 * dist);
    let mut f = |p: &[f64; 2]| {
        let v = family_field(alpha, beta, p);
        Ok([-v[0], -v[1]])
    };
    let start = [focus.0 + r0, focus.1];
    let s = f(&start)?[1].signum();
    let section = move |p: &[f64; 2]| s * (p[1] - focus.1);
    let mut radii: Vec<f64> = Vec::new();
    let mut verdict = None;
    let run = Dopri5::with_tol(1e-10).solve(&mut f, start, opts.window, Some(&section), &mut |o| {
        match o {
            Observation::Step { y, .. } => {
                if (y[0] - focus.0).hypot(y[1] - focus.1) > 2.0 * dist {
                    verdict = Some(Region::IV);
                    return Control::Stop;
                }
            }
            Observation::Crossing { y, .. } if y[0] > focus.0 => {
                radii.push(y[0] - focus.0);
                if let [.., a, b, c] = radii[..] {
                    let (d1, d2) = ((b - a).abs(), (c - b).abs());
                    if d2 < opts.recurrence && d2 < d1 {
                        verdict = Some(Region::III);
                        return Control::Stop;
                    }
                }
            }
            Observation::Crossing { .. } => {}
        }
        Control::Continue
    });
    match run {
        // A finite-time blow-up in backward time is an escape.
        Err(Error::Integration(_)) => Ok(Region::IV),
        Err(e) => Err(e),
        Ok(_) => Ok(verdict.unwrap_or(Region::C_approx)),
    }
}
