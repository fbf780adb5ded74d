//! The quadratic family
//!
//! ```text
//! x' = A(x − a)(y − b) − B
//! y' = C(x − c)(y − d) − D
//! ```
//!
//! its affine normal forms (cases I–VI), equilibria and centers.

pub mod normal_form;
pub mod regions;

use std::fmt;

use crate::bilinear::{solve_pair, Bilinear, Roots};
use crate::codim2::Matrix2;
use crate::error::{Error, Result};
use crate::ode::{rk4_step, Control, Dopri5, Observation};

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSystem {
    pub A: f64,
    pub B: f64,
    pub C: f64,
    pub D: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl QuadSystem {
    /// Rejects `A = 0` or `C = 0`.
    #[allow(non_snake_case, clippy::too_many_arguments)]
    pub fn new(A: f64, B: f64, C: f64, D: f64, a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if A == 0.0 || C == 0.0 || ![A, B, C, D, a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "quadratic system needs finite coefficients with A ≠ 0 and C ≠ 0".into(),
            ));
        }
        Ok(QuadSystem { A, B, C, D, a, b, c, d })
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        [
            self.A * (x - self.a) * (y - self.b) - self.B,
            self.C * (x - self.c) * (y - self.d) - self.D,
        ]
    }

    pub fn jacobian(&self, x: f64, y: f64) -> Matrix2 {
        [
            [self.A * (y - self.b), self.A * (x - self.a)],
            [self.C * (y - self.d), self.C * (x - self.c)],
        ]
    }

    /// Both components as expanded bilinear polynomials.
    pub fn as_bilinear(&self) -> (Bilinear, Bilinear) {
        let expand = |k: f64, p: f64, q: f64, e: f64| Bilinear::new(k * p * q - e, -k * q, -k * p, k);
        (
            expand(self.A, self.a, self.b, self.B),
            expand(self.C, self.c, self.d, self.D),
        )
    }
}

/// `v − s` written as `v`, `(v - s)` or `(v + |s|)`.
fn shifted(v: &str, s: f64) -> String {
    if s == 0.0 {
        v.to_string()
    } else if s > 0.0 {
        format!("({v} - {s})")
    } else {
        format!("({v} + {})", -s)
    }
}

/// ` - k` or ` + |k|`, omitted for zero.
fn minus(k: f64) -> String {
    if k == 0.0 {
        String::new()
    } else if k > 0.0 {
        format!(" - {k}")
    } else {
        format!(" + {}", -k)
    }
}

impl fmt::Display for QuadSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x' = {}*{}*{}{}, y' = {}*{}*{}{}",
            self.A,
            shifted("x", self.a),
            shifted("y", self.b),
            minus(self.B),
            self.C,
            shifted("x", self.c),
            shifted("y", self.d),
            minus(self.D)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl CaseTag {
    pub fn name(self) -> &'static str {
        match self {
            CaseTag::I => "I",
            CaseTag::II => "II",
            CaseTag::III => "III",
            CaseTag::IV => "IV",
            CaseTag::V => "V",
            CaseTag::VI => "VI",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Default relative tolerance for the equalities in [`affine_classify`].
pub const CLASSIFY_TOL: f64 = 1e-9;

fn same(p: f64, q: f64, tol: f64) -> bool {
    (p - q).abs() <= tol * (1.0 + p.abs().max(q.abs()))
}

pub fn affine_classify(q: &QuadSystem, tol: f64) -> CaseTag {
    let ac = same(q.a, q.c, tol);
    let bd = same(q.b, q.d, tol);
    match (ac, bd) {
        (false, false) => CaseTag::I,
        (false, true) => CaseTag::II,
        (true, false) => CaseTag::III,
        (true, true) if !same(q.B, 0.0, tol) => CaseTag::IV,
        (true, true) if !same(q.D, 0.0, tol) => CaseTag::V,
        (true, true) => CaseTag::VI,
    }
}

/// Result of [`affine_normalize`].
///
/// With `x = u·X + v`, `y = w·Y + r` and `τ = k·t` the input system becomes
/// `normalized`, i.e. `dX/dτ = F(uX + v, wY + r)/(u·k)` and
/// `dY/dτ = G(uX + v, wY + r)/(w·k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineNormalization {
    pub case: CaseTag,
    pub normalized: QuadSystem,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub r: f64,
    pub k: f64,
    /// Cases IV and V: the sign of the constant that is scaled to unit size
    /// (`-1` in the textbook form). `1.0` for the other cases.
    pub constant_sign: f64,
}

impl AffineNormalization {
    /// Normalized parameters `(B̄, C̄, D̄)`; entries that are fixed by the case
    /// are reported with their fixed value.
    pub fn parameters(&self) -> (f64, f64, f64) {
        (self.normalized.B, self.normalized.C, self.normalized.D)
    }

    pub fn to_normalized(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.v) / self.u, (y - self.r) / self.w)
    }

    pub fn to_original(&self, x: f64, y: f64) -> (f64, f64) {
        (self.u * x + self.v, self.w * y + self.r)
    }

    /// The input system written in the new coordinates and time, as bilinear
    /// polynomials in `(X, Y)`.
    pub fn pullback(&self, q: &QuadSystem) -> (Bilinear, Bilinear) {
        let (f, g) = q.as_bilinear();
        let sub = |p: Bilinear, scale: f64| {
            Bilinear::new(
                p.eval(self.v, self.r),
                self.u * (p.c10 + p.c11 * self.r),
                self.w * (p.c01 + p.c11 * self.v),
                p.c11 * self.u * self.w,
            )
            .scaled(1.0 / scale)
        };
        (sub(f, self.u * self.k), sub(g, self.w * self.k))
    }

    /// Largest coefficient difference between the pulled-back input and the
    /// normalized system.
    pub fn residual(&self, q: &QuadSystem) -> f64 {
        let (pf, pg) = self.pullback(q);
        let (nf, ng) = self.normalized.as_bilinear();
        pf.as_array()
            .iter()
            .zip(nf.as_array())
            .chain(pg.as_array().iter().zip(ng.as_array()))
            .fold(0.0f64, |m, (p, n)| m.max((p - n).abs()))
    }
}

/// Normal form of `q` for the case chosen by [`affine_classify`] with
/// [`CLASSIFY_TOL`].
pub fn affine_normalize(q: &QuadSystem) -> Result<AffineNormalization> {
    affine_normalize_as(q, affine_classify(q, CLASSIFY_TOL))
}

/// Normal form of `q` assuming `case`.
///
/// | case | normalized system |
/// |------|-------------------|
/// | I    | `x' = xy − B̄`, `y' = C̄(x − 1)(y − 1) − D̄` |
/// | II   | `x' = xy − B̄`, `y' = (x − 1)y − D̄` |
/// | III  | `x' = xy − B̄`, `y' = x(y − 1) − D̄` |
/// | IV   | `x' = xy ∓ 1`, `y' = xy − D̄` |
/// | V    | `x' = xy`, `y' = C̄xy ∓ 1` |
/// | VI   | `x' = xy`, `y' = C̄xy` |
pub fn affine_normalize_as(q: &QuadSystem, case: CaseTag) -> Result<AffineNormalization> {
    let (qa, qc) = (q.A, q.C);
    let degenerate = |what: &str| {
        Error::Classification(format!("case {case} claimed but {what} vanishes"))
    };
    let (v, r) = (q.a, q.b);
    let mut constant_sign = 1.0;
    let (u, w, k, normalized) = match case {
        CaseTag::I => {
            let (u, w) = (q.c - q.a, q.d - q.b);
            if u == 0.0 || w == 0.0 {
                return Err(degenerate(if u == 0.0 { "c − a" } else { "d − b" }));
            }
            let k = w * qa;
            let n = QuadSystem {
                A: 1.0,
                a: 0.0,
                b: 0.0,
                B: q.B / (u * w * qa),
                C: u * qc / (w * qa),
                c: 1.0,
                d: 1.0,
                D: q.D / (w * w * qa),
            };
            (u, w, k, n)
        }
        CaseTag::II => {
            let u = q.c - q.a;
            if u == 0.0 {
                return Err(degenerate("c − a"));
            }
            let w = u * qc / qa;
            let k = qa * w;
            let n = QuadSystem {
                A: 1.0,
                a: 0.0,
                b: 0.0,
                B: q.B / (u * u * qc),
                C: 1.0,
                c: 1.0,
                d: 0.0,
                D: q.D * qa / (u * u * qc * qc),
            };
            (u, w, k, n)
        }
        CaseTag::III => {
            let w = q.d - q.b;
            if w == 0.0 {
                return Err(degenerate("d − b"));
            }
            let u = w * qa / qc;
            let k = qa * w;
            let n = QuadSystem {
                A: 1.0,
                a: 0.0,
                b: 0.0,
                B: q.B * qc / (w * w * qa * qa),
                C: 1.0,
                c: 0.0,
                d: 1.0,
                D: q.D / (w * w * qa),
            };
            (u, w, k, n)
        }
        CaseTag::IV => {
            let bc = q.B * qc;
            if bc == 0.0 {
                return Err(degenerate("B"));
            }
            constant_sign = bc.signum();
            let w = bc.abs().sqrt() / qa.abs();
            let u = qa * w / qc;
            let k = qa * w;
            let n = QuadSystem {
                A: 1.0,
                a: 0.0,
                b: 0.0,
                B: constant_sign,
                C: 1.0,
                c: 0.0,
                d: 0.0,
                D: q.D / (qa * w * w),
            };
            (u, w, k, n)
        }
        CaseTag::V => {
            if q.D == 0.0 {
                return Err(degenerate("D"));
            }
            constant_sign = (q.D * qa).signum();
            let u = 1.0;
            let w = (q.D / qa).abs().sqrt();
            let k = qa * w;
            let n = QuadSystem {
                A: 1.0,
                a: 0.0,
                b: 0.0,
                B: q.B / (u * k),
                C: qc * u / (qa * w),
                c: 0.0,
                d: 0.0,
                D: constant_sign,
            };
            (u, w, k, n)
        }
        CaseTag::VI => {
            let n = QuadSystem {
                A: 1.0,
                a: 0.0,
                b: 0.0,
                B: q.B / qa,
                C: qc / qa,
                c: 0.0,
                d: 0.0,
                D: q.D / qa,
            };
            (1.0, 1.0, qa, n)
        }
    };
    Ok(AffineNormalization {
        case,
        normalized,
        u,
        v,
        w,
        r,
        k,
        constant_sign,
    })
}

/// Integrates `q` from `p0` and the normalized system from the mapped start
/// with the rescaled step, and returns the largest discrepancy after mapping
/// back, relative to `1 + |p|`. Stops early once `step·|J|` exceeds 1/2, where
/// the orbit is escaping and RK4 no longer resolves it.
pub fn conjugacy_residual(
    q: &QuadSystem,
    n: &AffineNormalization,
    p0: (f64, f64),
    step: f64,
    horizon: f64,
) -> Result<f64> {
    let mut f = |p: &[f64; 2]| Ok(q.eval(p[0], p[1]));
    let mut g = |p: &[f64; 2]| Ok(n.normalized.eval(p[0], p[1]));
    let mut y = [p0.0, p0.1];
    let z0 = n.to_normalized(p0.0, p0.1);
    let mut z = [z0.0, z0.1];
    let steps = (horizon / step).round() as usize;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        y = rk4_step(&mut f, &y, step)?;
        z = rk4_step(&mut g, &z, n.k * step)?;
        let (bx, by) = n.to_original(z[0], z[1]);
        let size = y[0].hypot(y[1]).max(bx.hypot(by));
        let stiffness = q.jacobian(y[0], y[1]).iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !size.is_finite() || stiffness * step > 0.5 {
            break;
        }
        worst = worst.max((bx - y[0]).hypot(by - y[1]) / (1.0 + size));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquilibriumLine {
    /// `x = value`.
    Vertical(f64),
    /// `y = value`.
    Horizontal(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumSet {
    Points(Vec<(f64, f64)>),
    /// The components share a linear factor.
    Lines(Vec<EquilibriumLine>),
    /// The components are proportional; every point of `F = 0` is an
    /// equilibrium.
    Curve,
}

pub fn equilibria_quadratic(q: &QuadSystem) -> EquilibriumSet {
    let (f, g) = q.as_bilinear();
    match solve_pair(&f, &g) {
        Roots::Points(p) => EquilibriumSet::Points(p),
        Roots::Continuum => {
            let mut lines = Vec::new();
            if q.B == 0.0 && q.D == 0.0 {
                if q.a == q.c {
                    lines.push(EquilibriumLine::Vertical(q.a));
                }
                if q.b == q.d {
                    lines.push(EquilibriumLine::Horizontal(q.b));
                }
            }
            if lines.is_empty() {
                EquilibriumSet::Curve
            } else {
                EquilibriumSet::Lines(lines)
            }
        }
    }
}

/// Whether the normalized case-II or case-III system with parameters `B`,
/// `D` satisfies the center condition, i.e. its equilibrium has purely
/// imaginary eigenvalues. This is the linear condition only: the return map
/// of the nonlinear system still drifts at third order in the radius (see
/// [`return_map_displacement`]).
pub fn center_check(case: CaseTag, b: f64, d: f64) -> Result<bool> {
    const TOL: f64 = 1e-10;
    match case {
        CaseTag::II => Ok(d < 0.0 && (b - (d - (-d).sqrt())).abs() <= TOL),
        CaseTag::III => Ok(b < 0.0 && (d - (b - (-b).sqrt())).abs() <= TOL),
        other => Err(Error::WrongCase(format!(
            "center condition is only known for cases II and III, not {other}"
        ))),
    }
}

/// Normalized case-II system `x' = xy − B`, `y' = (x − 1)y − D`.
pub fn case_ii(b: f64, d: f64) -> QuadSystem {
    QuadSystem { A: 1.0, a: 0.0, b: 0.0, B: b, C: 1.0, c: 1.0, d: 0.0, D: d }
}

/// Normalized case-III system `x' = xy − B`, `y' = x(y − 1) − D`.
pub fn case_iii(b: f64, d: f64) -> QuadSystem {
    QuadSystem { A: 1.0, a: 0.0, b: 0.0, B: b, C: 1.0, c: 0.0, d: 1.0, D: d }
}

/// First return to the horizontal half-line `{y = p.y, x > p.x}` starting at
/// `(p.x + r0, p.y)`; returns the signed displacement `r_return − r0`.
pub fn return_map_displacement(q: &QuadSystem, p: (f64, f64), r0: f64, tol: f64) -> Result<f64> {
    if r0 <= 0.0 {
        return Err(Error::InvalidArgument("return-map radius must be positive".into()));
    }
    let dir = q.eval(p.0 + r0, p.1)[1];
    if dir == 0.0 {
        return Err(Error::InvalidArgument("flow is tangent to the section".into()));
    }
    let s = dir.signum();
    let section = move |y: &[f64; 2]| s * (y[1] - p.1);
    let mut f = |y: &[f64; 2]| Ok(q.eval(y[0], y[1]));
    let mut hit = None;
    Dopri5::with_tol(tol).solve(&mut f, [p.0 + r0, p.1], 1e4, Some(&section), &mut |o| {
        if let Observation::Crossing { y, .. } = o {
            if y[0] > p.0 {
                hit = Some(y[0] - p.0);
                return Control::Stop;
            }
        }
        Control::Continue
    })?;
    hit.map(|r| r - r0)
        .ok_or_else(|| Error::Integration("orbit did not return to the section".into()))
}
