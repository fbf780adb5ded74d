//! Double regularization of a 2-cross field, its blow-up at `Σ00`, and the
//! planar bilinear system that governs the fast variables.

use std::fmt;
use std::str::FromStr;

use crate::bilinear::{solve_pair, Bilinear, Roots};
use crate::error::{Error, Result};
use crate::field::{PiecewiseField, SignPair, Transition};

/// Asymptotic behaviour of `ε/η` along the regularizing curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Fixed(f64),
    ToZero,
    ToInfinity,
}

impl Regime {
    /// Ratios at which the regime is sampled.
    pub fn probe_ratios(self) -> Vec<f64> {
        match self {
            Regime::Fixed(k) => vec![k],
            Regime::ToZero => vec![1e-2, 1e-4, 1e-6],
            Regime::ToInfinity => vec![1e2, 1e4, 1e6],
        }
    }
}

impl Default for Regime {
    fn default() -> Self {
        Regime::Fixed(1.0)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Fixed(k) => write!(f, "fixed({k})"),
            Regime::ToZero => f.write_str("to_zero"),
            Regime::ToInfinity => f.write_str("to_infinity"),
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "to-zero" | "to_zero" => return Ok(Regime::ToZero),
            "to-inf" | "to-infinity" | "to_infinity" => return Ok(Regime::ToInfinity),
            _ => {}
        }
        let value = s
            .strip_prefix("k=")
            .or_else(|| s.strip_prefix("fixed(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown regime `{s}`")))?;
        match value.trim().parse::<f64>() {
            Ok(k) if k.is_finite() && k > 0.0 => Ok(Regime::Fixed(k)),
            _ => Err(Error::InvalidArgument(format!(
                "regime ratio must be a positive number, got `{value}`"
            ))),
        }
    }
}

/// `X_{ε,η}(p) = Σ_s w_s(φ(x1/ε), φ(x2/η))·X_s(p)`.
pub fn regularized_eval(
    pw: &PiecewiseField,
    phi: Transition,
    eps: f64,
    eta: f64,
    p: &[f64; 3],
) -> Result<[f64; 3]> {
    let u = phi.eval(p[0] / eps);
    let v = phi.eval(p[1] / eta);
    let mut out = [0.0; 3];
    for s in SignPair::ALL {
        let w = crate::field::convex_weight(s, u, v);
        if w == 0.0 {
            continue;
        }
        if w == 1.0 {
            return pw.eval(s, p);
        }
        let x = pw.eval(s, p)?;
        for i in 0..3 {
            out[i] += w * x[i];
        }
    }
    Ok(out)
}

/// Where the quadrant fields are evaluated inside the blow-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlowupMode {
    /// The `ε → 0` limit: every field is evaluated at `(0, 0, x3)`.
    #[default]
    Strict,
    /// Fields keep their dependence on the blown-up coordinates.
    Local,
}

impl FromStr for BlowupMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(BlowupMode::Strict),
            "local" => Ok(BlowupMode::Local),
            _ => Err(Error::InvalidArgument(format!("unknown blow-up mode `{s}`"))),
        }
    }
}

impl fmt::Display for BlowupMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlowupMode::Strict => "strict",
            BlowupMode::Local => "local",
        })
    }
}

/// Normalization of the weights in the first two slow components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// Weights `(1 + s1·u)(1 + s2·v)`, four times the convex ones.
    #[default]
    Unnormalized,
    Convex,
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::Unnormalized => "unnormalized (4x convex)",
            Scaling::Convex => "convex",
        })
    }
}

/// Slow system of the blown-up regularization along `η = Kε`.
#[derive(Debug, Clone, Copy)]
pub struct SlowSystem<'a> {
    pub pw: &'a PiecewiseField,
    pub phi: Transition,
    pub k: f64,
    pub mode: BlowupMode,
    pub scaling: Scaling,
}

impl<'a> SlowSystem<'a> {
    pub fn new(pw: &'a PiecewiseField) -> Self {
        SlowSystem {
            pw,
            phi: Transition::ClampedIdentity,
            k: 1.0,
            mode: BlowupMode::Strict,
            scaling: Scaling::Unnormalized,
        }
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn with_mode(mut self, mode: BlowupMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_transition(mut self, phi: Transition) -> Self {
        self.phi = phi;
        self
    }

    fn weight_scale(&self) -> f64 {
        match self.scaling {
            Scaling::Unnormalized => 1.0,
            Scaling::Convex => 0.25,
        }
    }

    /// `(X1, X2, X3)` at blown-up coordinates `(x1b, x2b)` and height `x3`.
    /// `X3` always uses convex weights.
    pub fn eval(&self, x1b: f64, x2b: f64, x3: f64) -> Result<[f64; 3]> {
        let u = self.phi.eval(x1b);
        let v = self.phi.eval(x2b);
        let arg = match self.mode {
            BlowupMode::Strict => [0.0, 0.0, x3],
            BlowupMode::Local => [x1b, x2b, x3],
        };
        let mut out = [0.0; 3];
        for s in SignPair::ALL {
            let w = (1.0 + s.f1() * u) * (1.0 + s.f2() * v);
            if w == 0.0 {
                continue;
            }
            let x = self.pw.eval(s, &arg)?;
            out[0] += w * x[0];
            out[1] += w * x[1];
            out[2] += w * x[2];
        }
        let c = self.weight_scale();
        Ok([c * out[0], c * out[1] / self.k, out[2] / 4.0])
    }

    /// In strict mode the quadrant fields are frozen at `(0, 0, x3)`, so `X1`
    /// and `X2` are bilinear in `(φ(x1b), φ(x2b))`.
    pub fn bilinear_at(&self, x3: f64) -> Result<(Bilinear, Bilinear)> {
        if self.mode != BlowupMode::Strict {
            return Err(Error::InvalidArgument(
                "bilinear form only exists in strict mode".into(),
            ));
        }
        let vals = self.pw.eval_all(&[0.0, 0.0, x3])?;
        let c = self.weight_scale();
        let a = sums(&vals, 0).scaled(c);
        let b = sums(&vals, 1).scaled(c / self.k);
        Ok((a, b))
    }
}

/// Expansion of `Σ_s (1 + s1·x)(1 + s2·y)·v_s[comp]`.
fn sums(vals: &[[f64; 3]; 4], comp: usize) -> Bilinear {
    let mut out = Bilinear::default();
    for s in SignPair::ALL {
        let a = vals[s.index()][comp];
        out.c00 += a;
        out.c10 += s.f1() * a;
        out.c01 += s.f2() * a;
        out.c11 += s.f1() * s.f2() * a;
    }
    out
}

/// Reduced planar system `x' = eqx(x, y)`, `y' = r·eqy(x, y)` with
/// `r = ε/η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearXY {
    pub eqx: Bilinear,
    pub eqy: Bilinear,
    pub regime: Regime,
}

impl BilinearXY {
    pub fn eval(&self, x: f64, y: f64, ratio: f64) -> [f64; 2] {
        [self.eqx.eval(x, y), ratio * self.eqy.eval(x, y)]
    }

    pub fn jacobian(&self, x: f64, y: f64, ratio: f64) -> [[f64; 2]; 2] {
        let gx = self.eqx.grad(x, y);
        let gy = self.eqy.grad(x, y);
        [gx, [ratio * gy[0], ratio * gy[1]]]
    }

    /// Equilibria do not depend on the ratio.
    pub fn equilibria(&self) -> Roots {
        solve_pair(&self.eqx, &self.eqy)
    }
}

pub fn reduced_bilinear_system(pw: &PiecewiseField, regime: Regime) -> Result<BilinearXY> {
    let vals = pw.constants()?;
    Ok(BilinearXY {
        eqx: sums(&vals, 0),
        eqy: sums(&vals, 1),
        regime,
    })
}

/// The reduced system written as products of shifted coordinates:
/// `λ1(x − α1)(y − β1) − δ1` and `λ2(x − α2)(y − β2) − δ2`, equal to the
/// convex-normalized equations (one quarter of `eqx`, `eqy`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactoredForm {
    pub lambda1: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub delta1: f64,
    pub lambda2: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub delta2: f64,
}

fn factor(b: &Bilinear, which: &'static str) -> Result<[f64; 4]> {
    let scale = b.max_abs();
    if scale == 0.0 || b.c11.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateLambda(which));
    }
    let lambda = b.c11 / 4.0;
    let alpha = -b.c01 / b.c11;
    let beta = -b.c10 / b.c11;
    let delta = lambda * alpha * beta - b.c00 / 4.0;
    Ok([lambda, alpha, beta, delta])
}

impl FactoredForm {
    pub fn new(b: &BilinearXY) -> Result<Self> {
        let [lambda1, alpha1, beta1, delta1] = factor(&b.eqx, "lambda1")?;
        let [lambda2, alpha2, beta2, delta2] = factor(&b.eqy, "lambda2")?;
        Ok(FactoredForm {
            lambda1,
            alpha1,
            beta1,
            delta1,
            lambda2,
            alpha2,
            beta2,
            delta2,
        })
    }

    /// Expanded coefficients of the two factored equations.
    pub fn expand(&self) -> (Bilinear, Bilinear) {
        let e = |l: f64, a: f64, b: f64, d: f64| Bilinear::new(l * a * b - d, -l * b, -l * a, l);
        (
            e(self.lambda1, self.alpha1, self.beta1, self.delta1),
            e(self.lambda2, self.alpha2, self.beta2, self.delta2),
        )
    }
}

/// The factored system after moving `(α1, β1)` to the origin and dividing
/// time by `λ1`: `x' = xy − δ1`, `y' = C(x − α2)(y − β2) − δ2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteredForm {
    pub delta1: f64,
    pub c: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub delta2: f64,
    /// Original coordinates are `(x + shift.0, y + shift.1)`.
    pub shift: (f64, f64),
    /// Original time is new time divided by this factor.
    pub time_scale: f64,
}

impl CenteredForm {
    pub fn new(f: &FactoredForm) -> Self {
        let l = f.lambda1;
        CenteredForm {
            delta1: f.delta1 / l,
            c: f.lambda2 / l,
            alpha2: f.alpha2 - f.alpha1,
            beta2: f.beta2 - f.beta1,
            delta2: f.delta2 / l,
            shift: (f.alpha1, f.beta1),
            time_scale: l,
        }
    }

    pub fn expand(&self) -> (Bilinear, Bilinear) {
        let (c, a, b) = (self.c, self.alpha2, self.beta2);
        (
            Bilinear::new(-self.delta1, 0.0, 0.0, 1.0),
            Bilinear::new(c * a * b - self.delta2, -c * b, -c * a, c),
        )
    }

    /// Map a point of the centered system back to reduced coordinates.
    pub fn to_original(&self, x: f64, y: f64) -> (f64, f64) {
        (x + self.shift.0, y + self.shift.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::field::SmoothField3;
    use proptest::prelude::*;

    fn constant_sliding() -> PiecewiseField {
        let mut v = [[0.0; 3]; 4];
        for s in SignPair::ALL {
            v[s.index()] = [-s.f1(), -s.f2(), 1.0];
        }
        PiecewiseField::from_constants(v)
    }

    fn cross_slide() -> PiecewiseField {
        PiecewiseField::from_constants([
            [277.0 / 1800.0, -59.0 / 900.0, 1.0],
            [-623.0 / 1800.0, -59.0 / 900.0, 1.0],
            [-623.0 / 1800.0, -59.0 / 900.0, 1.0],
            [277.0 / 1800.0, 1741.0 / 900.0, 1.0],
        ])
    }

    fn bt_unfolding(alpha: f64, beta: f64) -> PiecewiseField {
        let (da, db) = (alpha / 4.0, beta / 4.0);
        PiecewiseField::from_constants([
            [5.0 / 36.0 - da, -1.0 / 18.0 - db, 1.0],
            [-13.0 / 36.0 - da, -1.0 / 18.0 - db, 1.0],
            [-13.0 / 36.0 - da, -1.0 / 18.0 - db, 1.0],
            [5.0 / 36.0 - da, 35.0 / 18.0 - db, 1.0],
        ])
    }

    fn regime_switch() -> PiecewiseField {
        let r = 13519f64.sqrt() / 1173.0;
        let (a, b) = (259.0 / 1800.0, -641.0 / 1800.0);
        let base = 13969.0 / 351900.0 - r;
        PiecewiseField::from_constants([
            [a, base, 1.0],
            [b, base, 1.0],
            [b, base, 1.0],
            [a, 717769.0 / 351900.0 - r, 1.0],
        ])
    }

    fn polynomial() -> PiecewiseField {
        let f = |a: &str, b: &str, c: &str| {
            SmoothField3::new(
                parse_expression(a).unwrap(),
                parse_expression(b).unwrap(),
                parse_expression(c).unwrap(),
            )
        };
        PiecewiseField::new([
            f("-1 + x1^2", "-1 + x2^2", "x3"),
            f("-1 + x1*x2", "1 - x3*x2", "x3"),
            f("1 + x1 + x3", "-1", "x3"),
            f("1", "1 + x3^2", "x3"),
        ])
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn regularization_saturates_outside_the_bands() {
        let pw = polynomial();
        let p = [0.7, -0.4, 0.3];
        let got = regularized_eval(&pw, Transition::ClampedCubic, 0.1, 0.2, &p).unwrap();
        assert_eq!(got, pw.eval(SignPair::PM, &p).unwrap());
    }

    #[test]
    fn regularization_at_the_origin_averages() {
        let got = regularized_eval(&constant_sliding(), Transition::ClampedIdentity, 0.3, 0.01, &[0.0; 3]).unwrap();
        assert_eq!(got, [0.0, 0.0, 1.0]);
        let got = regularized_eval(&cross_slide(), Transition::ClampedIdentity, 0.1, 0.1, &[0.0; 3]).unwrap();
        assert!(close(got[0], -173.0 / 1800.0, 1e-15));
        assert!(close(got[1], 391.0 / 900.0, 1e-15));
        assert!(close(got[2], 1.0, 1e-15));
    }

    #[test]
    fn local_mode_slow_system_matches_hand_expansion() {
        let pw = polynomial();
        let slow = SlowSystem::new(&pw).with_mode(BlowupMode::Local);
        for &(x, y, z) in &[(0.3, -0.2, 0.1), (-0.7, 0.5, -0.4), (0.0, 0.0, 0.2)] {
            let got = slow.eval(x, y, z).unwrap();
            let x1 = x * x * x - z * x - 3.0 * x + z
                + y * (x * x * x + x * x - x * z + 2.0 * x + z)
                + y * y * (-x * x - x);
            assert!(close(got[0], x1, 1e-14), "{got:?} vs {x1}");
            assert!(close(got[2], z, 1e-15));
        }
    }

    #[test]
    fn strict_slow_system_is_the_reduced_system() {
        let pw = cross_slide();
        let red = reduced_bilinear_system(&pw, Regime::default()).unwrap();
        let k = 2.5;
        let slow = SlowSystem::new(&pw).with_k(k);
        for &(x, y) in &[(0.1, 0.2), (-0.9, 0.4), (0.5, -0.5)] {
            let got = slow.eval(x, y, 0.7).unwrap();
            let want = red.eval(x, y, 1.0 / k);
            assert!(close(got[0], want[0], 1e-12));
            assert!(close(got[1], want[1], 1e-12));
        }
        let (a, b) = slow.bilinear_at(0.0).unwrap();
        assert_eq!(a, red.eqx);
        assert!(close(b.c11, red.eqy.c11 / k, 1e-15));
    }

    #[test]
    fn example_family_slow_system_at_bt_parameters() {
        let pw = bt_unfolding(0.0, 0.0);
        let slow = SlowSystem::new(&pw);
        let (x, y) = (0.3, -0.6);
        let got = slow.eval(x, y, 0.0).unwrap();
        assert!(close(got[0], -4.0 / 9.0 + x * y, 1e-15));
        assert!(close(got[1], -2.0 * x - 2.0 * y + 16.0 / 9.0 + 2.0 * x * y, 1e-14));
        let convex = slow.with_scaling(Scaling::Convex).eval(x, y, 0.0).unwrap();
        assert!(close(4.0 * convex[0], got[0], 1e-15));
    }

    #[test]
    fn reduced_systems_of_the_constant_examples() {
        let red = reduced_bilinear_system(&regime_switch(), Regime::default()).unwrap();
        assert!(close(red.eqx.c00, -191.0 / 450.0, 1e-15));
        assert!(close(red.eqx.c10, 0.0, 1e-15) && close(red.eqx.c01, 0.0, 1e-15));
        assert!(close(red.eqx.c11, 1.0, 1e-15));

        let red = reduced_bilinear_system(&constant_sliding(), Regime::ToZero).unwrap();
        assert_eq!(red.eqx, Bilinear::new(0.0, -4.0, 0.0, 0.0));
        assert_eq!(red.regime, Regime::ToZero);

        let red = reduced_bilinear_system(&bt_unfolding(0.0, 0.0), Regime::default()).unwrap();
        assert!(close(red.eqx.c00, -4.0 / 9.0, 1e-15));
        assert!(close(red.eqx.c11, 1.0, 1e-15));
        assert!(close(red.eqy.c00, 16.0 / 9.0, 1e-14));
        assert!(close(red.eqy.c11, 2.0, 1e-15));

        assert!(matches!(
            reduced_bilinear_system(&polynomial(), Regime::default()),
            Err(Error::NonConstant("++"))
        ));
    }

    #[test]
    fn factored_form_examples() {
        let red = reduced_bilinear_system(&regime_switch(), Regime::default()).unwrap();
        let f = FactoredForm::new(&red).unwrap();
        assert!(close(f.lambda1, 0.25, 1e-15));

        let red = reduced_bilinear_system(&bt_unfolding(0.0, 0.0), Regime::default()).unwrap();
        let f = FactoredForm::new(&red).unwrap();
        assert!(close(f.lambda2 / f.lambda1, 2.0, 1e-15));

        let flat = PiecewiseField::from_constants([[1.0, 1.0, 1.0]; 4]);
        let red = reduced_bilinear_system(&flat, Regime::default()).unwrap();
        assert_eq!(FactoredForm::new(&red), Err(Error::DegenerateLambda("lambda1")));
    }

    #[test]
    fn centered_form_identity_and_bt_shift() {
        let f = FactoredForm {
            lambda1: 1.0,
            alpha1: 0.0,
            beta1: 0.0,
            delta1: 0.3,
            lambda2: 2.0,
            alpha2: 1.0,
            beta2: -1.0,
            delta2: 0.5,
        };
        let c = CenteredForm::new(&f);
        assert_eq!(c.shift, (0.0, 0.0));
        assert_eq!(c.time_scale, 1.0);
        assert_eq!(c.expand(), f.expand());

        // At the BT parameters the double equilibrium is (2/3, 2/3); moving it
        // to the origin removes the constant term of the first equation.
        let red = reduced_bilinear_system(&bt_unfolding(0.0, 0.0), Regime::default()).unwrap();
        let c = CenteredForm::new(&FactoredForm::new(&red).unwrap());
        let (x0, y0) = (2.0 / 3.0 - c.shift.0, 2.0 / 3.0 - c.shift.1);
        assert!(close(x0 * y0 - c.delta1, 0.0, 1e-15));
        let (ex, ey) = c.expand();
        assert!(close(ex.eval(x0, y0), 0.0, 1e-15) && close(ey.eval(x0, y0), 0.0, 1e-14));
    }

    #[test]
    fn regime_parsing() {
        assert_eq!("k=2".parse::<Regime>().unwrap(), Regime::Fixed(2.0));
        assert_eq!("fixed(0.5)".parse::<Regime>().unwrap(), Regime::Fixed(0.5));
        assert_eq!("to-zero".parse::<Regime>().unwrap(), Regime::ToZero);
        assert_eq!("to-inf".parse::<Regime>().unwrap(), Regime::ToInfinity);
        assert!("k=-1".parse::<Regime>().is_err());
        assert!("k=nan".parse::<Regime>().is_err());
        assert!("sideways".parse::<Regime>().is_err());
        assert_eq!(Regime::Fixed(1.0).to_string(), "fixed(1)");
    }

    fn arb_bilinear() -> impl Strategy<Value = Bilinear> {
        proptest::array::uniform4(-3.0f64..3.0).prop_map(|c| Bilinear::new(c[0], c[1], c[2], c[3]))
    }

    proptest! {
        #[test]
        fn factored_form_reconstructs(eqx in arb_bilinear(), eqy in arb_bilinear()) {
            prop_assume!(eqx.c11.abs() > 0.05 && eqy.c11.abs() > 0.05);
            let b = BilinearXY { eqx, eqy, regime: Regime::default() };
            let f = FactoredForm::new(&b).unwrap();
            let (ex, ey) = f.expand();
            // Reconstruction error relative to the coefficient scale.
            let tol = |b: &Bilinear| 1e-12 * (1.0 + b.max_abs() / b.c11.abs()).powi(2);
            for (got, want) in [(ex, eqx.scaled(0.25)), (ey, eqy.scaled(0.25))] {
                for (g, w) in got.as_array().iter().zip(want.as_array()) {
                    prop_assert!((g - w).abs() <= tol(&want), "{g} vs {w}");
                }
            }
        }

        #[test]
        fn centered_form_reconstructs(eqx in arb_bilinear(), eqy in arb_bilinear(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
            prop_assume!(eqx.c11.abs() > 0.05 && eqy.c11.abs() > 0.05);
            let b = BilinearXY { eqx, eqy, regime: Regime::default() };
            let f = FactoredForm::new(&b).unwrap();
            let c = CenteredForm::new(&f);
            let (cx, cy) = c.expand();
            let (ox, oy) = c.to_original(x, y);
            let scale = 1e-12 * (1.0 + eqx.max_abs() / eqx.c11.abs()).powi(3) * (1.0 + eqy.max_abs() / eqx.c11.abs()).powi(2);
            prop_assert!((c.time_scale * cx.eval(x, y) - eqx.eval(ox, oy) / 4.0).abs() <= scale);
            prop_assert!((c.time_scale * cy.eval(x, y) - eqy.eval(ox, oy) / 4.0).abs() <= scale);
        }

        #[test]
        fn outside_band_is_exact(x in 0.2f64..2.0, y in 0.2f64..2.0, z in -2.0f64..2.0, sx in any::<bool>(), sy in any::<bool>()) {
            let pw = polynomial();
            let p = [if sx { x } else { -x }, if sy { y } else { -y }, z];
            let s = SignPair::new(if sx { 1 } else { -1 }, if sy { 1 } else { -1 }).unwrap();
            for phi in [Transition::ClampedIdentity, Transition::ClampedCubic] {
                let got = regularized_eval(&pw, phi, 0.1, 0.2, &p).unwrap();
                prop_assert_eq!(got, pw.eval(s, &p).unwrap());
            }
        }
    }
}
