//! Sliding on the codimension-two stratum `Σ00`.
//!
//! Three sufficient criteria are available:
//!
//! * the indicator `D = tr(J)·det(J)` of the slow system at an equilibrium
//!   (`η = Kε`, any smooth quadrant fields);
//! * the equilibria of the reduced bilinear system together with their
//!   stability under a regime for `ε/η` (constant quadrant fields);
//! * freezing general fields at a point of `Σ00` and applying the previous
//!   criterion to the constant approximation.

use std::fmt;

use crate::bilinear::{solve_pair, Roots};
use crate::error::{Error, Result};
use crate::field::{convex_weight, PiecewiseField, SignPair};
use crate::regularization::{reduced_bilinear_system, BilinearXY, BlowupMode, Regime, SlowSystem};

pub type Matrix2 = [[f64; 2]; 2];

/// Tolerance for the open unit square that must contain the equilibria.
pub const UNIT_SQUARE_TOL: f64 = 1e-9;

pub fn trace(j: &Matrix2) -> f64 {
    j[0][0] + j[1][1]
}

pub fn det(j: &Matrix2) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Complex eigenvalues `(re, im)` of a 2×2 matrix, ordered by real part.
pub fn eigenvalues(j: &Matrix2) -> [(f64, f64); 2] {
    let (t, d) = (trace(j), det(j));
    let disc = t * t - 4.0 * d;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [((t - s) / 2.0, 0.0), ((t + s) / 2.0, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [(t / 2.0, -s / 2.0), (t / 2.0, s / 2.0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumType {
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    CenterBoundary,
    Degenerate,
}

impl EquilibriumType {
    pub fn name(self) -> &'static str {
        match self {
            EquilibriumType::Saddle => "saddle",
            EquilibriumType::StableNode => "stable_node",
            EquilibriumType::UnstableNode => "unstable_node",
            EquilibriumType::StableFocus => "stable_focus",
            EquilibriumType::UnstableFocus => "unstable_focus",
            EquilibriumType::CenterBoundary => "center_boundary",
            EquilibriumType::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for EquilibriumType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify_equilibrium(j: &Matrix2, tol: f64) -> EquilibriumType {
    let (t, d) = (trace(j), det(j));
    if d < -tol {
        EquilibriumType::Saddle
    } else if d > tol {
        let focus = t * t - 4.0 * d < 0.0;
        if t.abs() <= tol {
            EquilibriumType::CenterBoundary
        } else if t < 0.0 {
            if focus {
                EquilibriumType::StableFocus
            } else {
                EquilibriumType::StableNode
            }
        } else if focus {
            EquilibriumType::UnstableFocus
        } else {
            EquilibriumType::UnstableNode
        }
    } else {
        EquilibriumType::Degenerate
    }
}

/// Scale-aware variant used where the Jacobian entries may be tiny, as in the
/// extreme ratios of a regime.
fn classify_scaled(j: &Matrix2) -> EquilibriumType {
    let s = j[0][0].abs().max(j[0][1].abs()).max(j[1][0].abs()).max(j[1][1].abs());
    if s == 0.0 {
        return EquilibriumType::Degenerate;
    }
    let n = [[j[0][0] / s, j[0][1] / s], [j[1][0] / s, j[1][1] / s]];
    classify_equilibrium(&n, 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attracting,
    Repelling,
    Saddle,
    Undecided,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Attracting => "attracting",
            Stability::Repelling => "repelling",
            Stability::Saddle => "saddle",
            Stability::Undecided => "undecided",
        }
    }

    fn of(kind: EquilibriumType) -> Stability {
        match kind {
            EquilibriumType::Saddle => Stability::Saddle,
            EquilibriumType::StableNode | EquilibriumType::StableFocus => Stability::Attracting,
            EquilibriumType::UnstableNode | EquilibriumType::UnstableFocus => Stability::Repelling,
            EquilibriumType::CenterBoundary | EquilibriumType::Degenerate => Stability::Undecided,
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumReport {
    pub location: (f64, f64),
    pub jacobian: Matrix2,
    pub trace: f64,
    pub det: f64,
    pub kind: EquilibriumType,
    pub in_unit_square: bool,
}

impl EquilibriumReport {
    pub fn new(location: (f64, f64), jacobian: Matrix2) -> Self {
        let lim = 1.0 - UNIT_SQUARE_TOL;
        EquilibriumReport {
            location,
            jacobian,
            trace: trace(&jacobian),
            det: det(&jacobian),
            kind: classify_scaled(&jacobian),
            in_unit_square: location.0.abs() < lim && location.1.abs() < lim,
        }
    }
}

/// Stability of an equilibrium of the reduced system when `ε/η` follows
/// `regime`. Limits are probed along a ladder of ratios and reported only
/// when every rung agrees.
pub fn ratio_regime_stability(b: &BilinearXY, p: (f64, f64), regime: Regime) -> Stability {
    let mut verdict = None;
    for r in regime.probe_ratios() {
        let s = Stability::of(classify_scaled(&b.jacobian(p.0, p.1, r)));
        if s == Stability::Undecided {
            return s;
        }
        match verdict {
            None => verdict = Some(s),
            Some(v) if v != s => return Stability::Undecided,
            _ => {}
        }
    }
    verdict.unwrap_or(Stability::Undecided)
}

fn in_box(p: (f64, f64)) -> bool {
    let lim = 1.0 + UNIT_SQUARE_TOL;
    p.0.abs() <= lim && p.1.abs() <= lim
}

/// Equilibria of the slow system `(X1, X2)` in the blow-up box `[-1, 1]²`.
///
/// When the first two components are bilinear in `(φ(x1), φ(x2))` (strict
/// mode, or constant fields) the roots are found in closed form; otherwise a
/// damped Newton iteration is started from a 9×9 grid.
pub fn slow_manifold_equilibria(slow: &SlowSystem<'_>, x3: f64) -> Result<Vec<(f64, f64)>> {
    if slow.mode == BlowupMode::Strict || slow.pw.is_constant() {
        let strict = slow.with_mode(BlowupMode::Strict);
        let (a, b) = strict.bilinear_at(x3)?;
        let roots = match solve_pair(&a, &b) {
            Roots::Points(p) => p,
            Roots::Continuum => {
                return Err(Error::Classification(
                    "slow system has a continuum of equilibria".into(),
                ))
            }
        };
        return Ok(roots
            .into_iter()
            .filter(|&p| in_box(p))
            .map(|(u, v)| (slow.phi.inverse(u), slow.phi.inverse(v)))
            .collect());
    }
    let mut found: Vec<(f64, f64)> = Vec::new();
    for i in 0..9 {
        for j in 0..9 {
            let seed = (-1.0 + 0.25 * i as f64, -1.0 + 0.25 * j as f64);
            if let Some(p) = newton(slow, x3, seed)? {
                if !found.iter().any(|q| (q.0 - p.0).hypot(q.1 - p.1) < 1e-7) {
                    found.push(p);
                }
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(found)
}

fn residual(slow: &SlowSystem<'_>, x3: f64, p: (f64, f64)) -> Result<(f64, f64, f64)> {
    let v = slow.eval(p.0, p.1, x3)?;
    Ok((v[0], v[1], v[0].hypot(v[1])))
}

/// Damped Newton on `(X1, X2) = 0`, iterates projected onto the box.
fn newton(slow: &SlowSystem<'_>, x3: f64, seed: (f64, f64)) -> Result<Option<(f64, f64)>> {
    let mut p = seed;
    let (mut f, mut g, mut res) = residual(slow, x3, p)?;
    for _ in 0..60 {
        if res < 1e-13 {
            break;
        }
        let j = finite_difference_jacobian(slow, p, x3)?;
        let d = det(&j);
        if d.abs() < 1e-300 {
            return Ok(None);
        }
        let dx = (j[1][1] * f - j[0][1] * g) / d;
        let dy = (j[0][0] * g - j[1][0] * f) / d;
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-6 {
            let q = (
                (p.0 - lambda * dx).clamp(-1.0, 1.0),
                (p.1 - lambda * dy).clamp(-1.0, 1.0),
            );
            let (nf, ng, nres) = residual(slow, x3, q)?;
            if nres < res {
                p = q;
                (f, g, res) = (nf, ng, nres);
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((res < 1e-10 && in_box(p)).then_some(p))
}

pub fn finite_difference_jacobian(slow: &SlowSystem<'_>, p: (f64, f64), x3: f64) -> Result<Matrix2> {
    let hx = 1e-6 * (1.0 + p.0.abs());
    let hy = 1e-6 * (1.0 + p.1.abs());
    let fxp = slow.eval(p.0 + hx, p.1, x3)?;
    let fxm = slow.eval(p.0 - hx, p.1, x3)?;
    let fyp = slow.eval(p.0, p.1 + hy, x3)?;
    let fym = slow.eval(p.0, p.1 - hy, x3)?;
    Ok([
        [(fxp[0] - fxm[0]) / (2.0 * hx), (fyp[0] - fym[0]) / (2.0 * hy)],
        [(fxp[1] - fxm[1]) / (2.0 * hx), (fyp[1] - fym[1]) / (2.0 * hy)],
    ])
}

/// Jacobian of `(X1, X2)` with respect to the blown-up coordinates; exact in
/// the bilinear case, central differences otherwise.
pub fn jacobian_d0(slow: &SlowSystem<'_>, p: (f64, f64), x3: f64) -> Result<Matrix2> {
    if slow.mode == BlowupMode::Strict || slow.pw.is_constant() {
        let (a, b) = slow.with_mode(BlowupMode::Strict).bilinear_at(x3)?;
        let (u, v) = (slow.phi.eval(p.0), slow.phi.eval(p.1));
        let (du, dv) = (slow.phi.deriv(p.0), slow.phi.deriv(p.1));
        let ga = a.grad(u, v);
        let gb = b.grad(u, v);
        return Ok([[ga[0] * du, ga[1] * dv], [gb[0] * du, gb[1] * dv]]);
    }
    finite_difference_jacobian(slow, p, x3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorEntry {
    pub x3: f64,
    pub point: (f64, f64),
    pub jacobian: Matrix2,
    pub trace: f64,
    pub det: f64,
    /// `trace · det`.
    pub d: f64,
}

impl IndicatorEntry {
    pub fn is_certificate(&self) -> bool {
        let s = self.jacobian.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        self.d.abs() > 1e-12 * s.powi(3).max(f64::MIN_POSITIVE)
    }
}

/// `D = tr(J)·det(J)` at an arbitrary point of the blow-up box.
pub fn indicator_at(slow: &SlowSystem<'_>, p: (f64, f64), x3: f64) -> Result<IndicatorEntry> {
    let jacobian = jacobian_d0(slow, p, x3)?;
    let (t, d) = (trace(&jacobian), det(&jacobian));
    Ok(IndicatorEntry {
        x3,
        point: p,
        jacobian,
        trace: t,
        det: d,
        d: t * d,
    })
}

/// The indicator at every slow-manifold equilibrium over `(0, 0, x3)`.
pub fn sliding_indicator(slow: &SlowSystem<'_>, x3: f64) -> Result<Vec<IndicatorEntry>> {
    slow_manifold_equilibria(slow, x3)?
        .into_iter()
        .map(|p| indicator_at(slow, p, x3))
        .collect()
}

/// Follow an equilibrium branch from `(start, z0)` to each requested height,
/// correcting by Newton after steps of at most `0.005` in `x3`.
pub fn continue_branch(
    slow: &SlowSystem<'_>,
    start: (f64, f64),
    z0: f64,
    targets: &[f64],
) -> Result<Vec<IndicatorEntry>> {
    let mut out = Vec::with_capacity(targets.len());
    for &target in targets {
        let steps = ((target - z0).abs() / 0.005).ceil().max(1.0) as usize;
        let mut p = start;
        for k in 1..=steps {
            let z = z0 + (target - z0) * k as f64 / steps as f64;
            p = newton(slow, z, p)?.ok_or_else(|| {
                Error::Classification(format!("equilibrium branch lost at x3 = {z}"))
            })?;
        }
        out.push(indicator_at(slow, p, target)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictTag {
    Sliding,
    NoEquilibrium,
    Undetermined,
}

impl VerdictTag {
    pub fn name(self) -> &'static str {
        match self {
            VerdictTag::Sliding => "SLIDING",
            VerdictTag::NoEquilibrium => "NO_EQUILIBRIUM",
            VerdictTag::Undetermined => "UNDETERMINED",
        }
    }
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which sufficient condition produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Indicator,
    ConstantFieldEquilibria,
    ConstantApproximation,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Indicator => "indicator trace*det at slow equilibria",
            Criterion::ConstantFieldEquilibria => "equilibria of the reduced constant-field system",
            Criterion::ConstantApproximation => "constant approximation at the point",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedEquilibrium {
    pub report: EquilibriumReport,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingVerdict {
    pub tag: VerdictTag,
    pub criterion: Criterion,
    pub regime: Option<Regime>,
    pub equilibria: Vec<CertifiedEquilibrium>,
    pub indicator: Vec<IndicatorEntry>,
    pub note: Option<String>,
}

impl SlidingVerdict {
    fn new(tag: VerdictTag, criterion: Criterion, regime: Option<Regime>) -> Self {
        SlidingVerdict {
            tag,
            criterion,
            regime,
            equilibria: Vec::new(),
            indicator: Vec::new(),
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Verdict for a constant 2-cross field from the reduced bilinear system.
///
/// The certificate Jacobians are taken at the first ratio probed by the
/// regime.
pub fn sliding_verdict(pw: &PiecewiseField, regime: Regime) -> Result<SlidingVerdict> {
    let crit = Criterion::ConstantFieldEquilibria;
    let vals = pw.constants()?;
    let b = reduced_bilinear_system(pw, regime)?;
    let mut verdict = SlidingVerdict::new(VerdictTag::Undetermined, crit, Some(regime));
    if vals.iter().any(|v| v[2].abs() <= 1e-12) {
        return Ok(verdict.with_note("a third component vanishes; Σ00 is not crossed transversally"));
    }
    let roots = match b.equilibria() {
        Roots::Points(p) => p,
        Roots::Continuum => return Ok(verdict.with_note("continuum of equilibria")),
    };
    let ratio = regime.probe_ratios()[0];
    let outer = 1.0 + UNIT_SQUARE_TOL;
    for &p in &roots {
        if p.0.abs() > outer || p.1.abs() > outer {
            continue;
        }
        let report = EquilibriumReport::new(p, b.jacobian(p.0, p.1, ratio));
        if !report.in_unit_square {
            verdict.equilibria.push(CertifiedEquilibrium {
                report,
                stability: Stability::Undecided,
            });
            return Ok(verdict.with_note("equilibrium on the boundary of the blow-up box"));
        }
        verdict.equilibria.push(CertifiedEquilibrium {
            report,
            stability: ratio_regime_stability(&b, p, regime),
        });
    }
    verdict.tag = match verdict.equilibria.as_slice() {
        [] => VerdictTag::NoEquilibrium,
        [_, _] => VerdictTag::Sliding,
        [one] => match one.stability {
            Stability::Attracting | Stability::Repelling => VerdictTag::Sliding,
            _ => {
                verdict.note = Some(format!(
                    "single equilibrium is {} under {regime}",
                    one.stability
                ));
                VerdictTag::Undetermined
            }
        },
        _ => VerdictTag::Undetermined,
    };
    Ok(verdict)
}

/// Verdict from the indicator at the slow equilibria over `(0, 0, x3)`.
pub fn indicator_verdict(slow: &SlowSystem<'_>, x3: f64) -> Result<SlidingVerdict> {
    let entries = sliding_indicator(slow, x3)?;
    let tag = if entries.is_empty() {
        VerdictTag::NoEquilibrium
    } else if entries.iter().any(IndicatorEntry::is_certificate) {
        VerdictTag::Sliding
    } else {
        VerdictTag::Undetermined
    };
    let mut v = SlidingVerdict::new(tag, Criterion::Indicator, Some(Regime::Fixed(1.0 / slow.k)));
    v.indicator = entries;
    if tag == VerdictTag::Undetermined {
        v.note = Some("indicator vanishes at every equilibrium".into());
    }
    Ok(v)
}

/// Freeze the quadrant fields at `p0`. The approximation is valid when every
/// frozen field is transversal to both switching planes and to `Σ00`.
pub fn constant_approximation(
    pw: &PiecewiseField,
    p0: &[f64; 3],
    tol: f64,
) -> Result<(PiecewiseField, bool)> {
    let vals = pw.eval_all(p0)?;
    let valid = vals
        .iter()
        .all(|v| v[0].abs() > tol && v[1].abs() > tol && v[2].abs() > tol);
    Ok((PiecewiseField::from_constants(vals), valid))
}

/// Verdict for a general field through its constant approximation at
/// `(0, 0, x3)`.
pub fn approximate_verdict(pw: &PiecewiseField, x3: f64, regime: Regime) -> Result<SlidingVerdict> {
    let (frozen, valid) = constant_approximation(pw, &[0.0, 0.0, x3], 1e-12)?;
    let mut v = sliding_verdict(&frozen, regime)?;
    v.criterion = Criterion::ConstantApproximation;
    if !valid {
        v.tag = VerdictTag::Undetermined;
        v.note = Some("frozen fields are not transversal to the switching planes".into());
    }
    Ok(v)
}

/// `dx3/dt` on `Σ00`: the third slow component averaged with the weights of
/// the attracting equilibrium of the reduced system.
pub fn codim2_drift(pw: &PiecewiseField, x3: f64, regime: Regime) -> Result<f64> {
    let p0 = [0.0, 0.0, x3];
    let frozen = pw.frozen_at(&p0)?;
    let b = reduced_bilinear_system(&frozen, regime)?;
    let lim = 1.0 - UNIT_SQUARE_TOL;
    let eq = b
        .equilibria()
        .points()
        .iter()
        .copied()
        .filter(|p| p.0.abs() < lim && p.1.abs() < lim)
        .find(|&p| ratio_regime_stability(&b, p, regime) == Stability::Attracting)
        .ok_or(Error::UndefinedDrift)?;
    let vals = frozen.constants()?;
    Ok(SignPair::ALL
        .iter()
        .map(|&s| convex_weight(s, eq.0, eq.1) * vals[s.index()][2])
        .sum())
}
