//! Bogdanov–Takens normal form of the case-I family near its double-zero
//! equilibrium.
//!
//! Write `B = B1 + C²/(1+C)²`, `D = D1 + C/(1+C)²`. At `B1 = D1 = 0` the
//! system `x' = xy − B`, `y' = C(x−1)(y−1) − D` has a double-zero
//! equilibrium at `(p, p)`, `p = C/(1+C)`. The chain
//!
//! 1. translate by `(p, p)` and scale time by `C/(1+C)`,
//! 2. `x = u + v/(1+C)`, `y = −u + C·v/(1+C)`,
//! 3. `v = Y + k` removing the constant of `u'`,
//! 4. `u = X − s` removing the `X`-linear term of `v'`,
//!
//! gives `X' = Y`, `Y' = b00 + b01·Y + b20·X² + b11·XY + b02·Y²`.

use crate::error::{Error, Result};

/// Polynomial of degree ≤ 2 in two variables:
/// `c00 + c10·x + c01·y + c20·x² + c11·xy + c02·y²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Poly2 {
    pub c00: f64,
    pub c10: f64,
    pub c01: f64,
    pub c20: f64,
    pub c11: f64,
    pub c02: f64,
}

/// Affine form `c + cx·x + cy·y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub c: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Affine {
    pub fn new(c: f64, cx: f64, cy: f64) -> Self {
        Affine { c, cx, cy }
    }

    fn times(self, o: Affine) -> Poly2 {
        Poly2 {
            c00: self.c * o.c,
            c10: self.c * o.cx + self.cx * o.c,
            c01: self.c * o.cy + self.cy * o.c,
            c20: self.cx * o.cx,
            c11: self.cx * o.cy + self.cy * o.cx,
            c02: self.cy * o.cy,
        }
    }

    fn poly(self) -> Poly2 {
        Poly2 {
            c00: self.c,
            c10: self.cx,
            c01: self.cy,
            ..Poly2::default()
        }
    }
}

impl Poly2 {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c00 + self.c10 * x + self.c01 * y + self.c20 * x * x + self.c11 * x * y + self.c02 * y * y
    }

    pub fn scaled(&self, k: f64) -> Poly2 {
        self.combine(k, &Poly2::default(), 0.0)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Poly2, b: f64) -> Poly2 {
        Poly2 {
            c00: a * self.c00 + b * other.c00,
            c10: a * self.c10 + b * other.c10,
            c01: a * self.c01 + b * other.c01,
            c20: a * self.c20 + b * other.c20,
            c11: a * self.c11 + b * other.c11,
            c02: a * self.c02 + b * other.c02,
        }
    }

    /// `self(x(X, Y), y(X, Y))` for affine `x`, `y`.
    pub fn compose(&self, x: Affine, y: Affine) -> Poly2 {
        let terms = [
            (self.c10, x.poly()),
            (self.c01, y.poly()),
            (self.c20, x.times(x)),
            (self.c11, x.times(y)),
            (self.c02, y.times(y)),
        ];
        terms.iter().fold(
            Poly2 {
                c00: self.c00,
                ..Poly2::default()
            },
            |acc, (k, p)| acc.combine(1.0, p, *k),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BTCoefficients {
    pub b00: f64,
    pub b01: f64,
    pub b20: f64,
    pub b11: f64,
    pub b02: f64,
    /// Largest coefficient of `X' − Y`; zero up to rounding.
    pub x_residual: f64,
}

fn check_c(c: f64) -> Result<()> {
    if !c.is_finite() || c == 0.0 || c == 1.0 || c == -1.0 {
        return Err(Error::InvalidArgument(format!(
            "normal form needs C ∉ {{-1, 0, 1}}, got {c}"
        )));
    }
    Ok(())
}

/// The family after step 1 of the chain, as `(F, G)`.
fn translated(c: f64, b1: f64, d1: f64) -> (Poly2, Poly2) {
    let p = c / (1.0 + c);
    let b = b1 + p * p;
    let d = d1 + c / ((1.0 + c) * (1.0 + c));
    let f = Poly2 {
        c00: -b,
        c11: 1.0,
        ..Poly2::default()
    };
    let g = Poly2 {
        c00: c - d,
        c10: -c,
        c01: -c,
        c11: c,
        ..Poly2::default()
    };
    let (sx, sy) = (Affine::new(p, 1.0, 0.0), Affine::new(p, 0.0, 1.0));
    let m = (1.0 + c) / c;
    (f.compose(sx, sy).scaled(m), g.compose(sx, sy).scaled(m))
}

/// Runs the coordinate chain numerically.
pub fn bt_normal_form(c: f64, b1: f64, d1: f64) -> Result<BTCoefficients> {
    check_c(c)?;
    let (f, g) = translated(c, b1, d1);
    let q = 1.0 / (1.0 + c);
    // Old coordinates = M·(u, v) with M = [[1, q], [−1, c·q]], det M = 1.
    let field = |shift_u: f64, shift_v: f64| {
        let x = Affine::new(shift_u + q * shift_v, 1.0, q);
        let y = Affine::new(-shift_u + c * q * shift_v, -1.0, c * q);
        let (fo, go) = (f.compose(x, y), g.compose(x, y));
        // M⁻¹ = [[c·q, −q], [1, 1]].
        (fo.combine(c * q, &go, -q), fo.combine(1.0, &go, 1.0))
    };
    let (u0, _) = field(0.0, 0.0);
    let k = -u0.c00 / u0.c01;
    let (_, v1) = field(0.0, k);
    let s = v1.c10 / (2.0 * v1.c20);
    let (u2, v2) = field(-s, k);
    let x_residual = [u2.c00, u2.c10, u2.c01 - 1.0, u2.c20, u2.c11, u2.c02]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(BTCoefficients {
        b00: v2.c00,
        b01: v2.c01,
        b20: v2.c20,
        b11: v2.c11,
        b02: v2.c02,
        x_residual,
    })
}

/// Determinant of the Jacobian of `(x, y, B1, D1) ↦ (F, G, tr L, det L)` at
/// the origin, where `(F, G)` is the translated family and `L` its
/// linearization. Nonzero means the unfolding is regular.
pub fn bt_regularity_determinant(c: f64) -> Result<f64> {
    check_c(c)?;
    let map = |z: [f64; 4]| -> [f64; 4] {
        let (f, g) = translated(c, z[2], z[3]);
        let (x, y) = (z[0], z[1]);
        let l = [
            [f.c10 + 2.0 * f.c20 * x + f.c11 * y, f.c01 + f.c11 * x + 2.0 * f.c02 * y],
            [g.c10 + 2.0 * g.c20 * x + g.c11 * y, g.c01 + g.c11 * x + 2.0 * g.c02 * y],
        ];
        [
            f.eval(x, y),
            g.eval(x, y),
            l[0][0] + l[1][1],
            l[0][0] * l[1][1] - l[0][1] * l[1][0],
        ]
    };
    // Every entry is a polynomial of degree ≤ 2 in each variable, so central
    // differences are exact up to rounding.
    let h = 1e-3;
    let mut jac = [[0.0; 4]; 4];
    for j in 0..4 {
        let (mut zp, mut zm) = ([0.0; 4], [0.0; 4]);
        zp[j] = h;
        zm[j] = -h;
        let (fp, fm) = (map(zp), map(zm));
        for i in 0..4 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(det4(jac))
}

fn det4(m: [[f64; 4]; 4]) -> f64 {
    let mut a = m;
    let mut det = 1.0;
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        let pivot_row = a[col];
        for row in a.iter_mut().skip(col + 1) {
            let f = row[col] / pivot_row[col];
            for (r, p) in row.iter_mut().zip(pivot_row).skip(col) {
                *r -= f * p;
            }
        }
    }
    det
}

/// Unfolding parameters `(μ, ν)` of the `C = 2` family
/// `x' = xy − 4/9 − α`, `y' = 2(x−1)(y−1) − 2/9 − β`.
pub fn bt_family_normal_form(alpha: f64, beta: f64) -> (f64, f64) {
    let mu = -1.5 * beta + 9.0 / 8.0 * alpha * alpha - 9.0 / 8.0 * alpha * beta
        + 9.0 / 32.0 * beta * beta
        - 1.5 * alpha;
    let nu = 9.0 / 4.0 * (alpha - beta / 2.0);
    (mu, nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms_of_the_chain() {
        for &(c, b1, d1) in &[(2.0, 0.0, 0.0), (3.0, 0.1, 0.0), (-0.5, 0.2, -0.3), (5.0, -0.7, 0.4)] {
            let bt = bt_normal_form(c, b1, d1).unwrap();
            let cp = c + 1.0;
            assert!((bt.b20 + cp * cp / c).abs() < 1e-12);
            assert!((bt.b11 - (c * c - 1.0) / c).abs() < 1e-12);
            assert!((bt.b01 - cp * cp * (b1 * c - d1) / (2.0 * c * c)).abs() < 1e-12);
            assert!((bt.b02 - 1.0).abs() < 1e-12);
            assert!(bt.x_residual < 1e-12);
        }
    }

    #[test]
    fn b01_at_c_three() {
        let bt = bt_normal_form(3.0, 0.1, 0.0).unwrap();
        assert!((bt.b01 - 4.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn c_two_chain_gives_the_unfolding() {
        for &(a, b) in &[(0.0, 0.0), (-0.06, 0.04), (0.3, -0.2), (0.01, 0.5)] {
            let bt = bt_normal_form(2.0, a, b).unwrap();
            let (mu, nu) = bt_family_normal_form(a, b);
            assert!((bt.b00 - mu).abs() < 1e-13, "{} vs {mu}", bt.b00);
            assert!((bt.b01 - nu).abs() < 1e-13);
        }
    }

    #[test]
    fn unfolding_values() {
        assert_eq!(bt_family_normal_form(0.0, 0.0), (0.0, 0.0));
        let (mu, nu) = bt_family_normal_form(-0.06, 0.04);
        assert!((mu - 0.0372).abs() < 1e-12 && (nu + 0.18).abs() < 1e-12);
        assert_eq!(bt_family_normal_form(0.1, 0.2).1, 0.0);
    }

    #[test]
    fn excluded_c_values() {
        for c in [-1.0, 0.0, 1.0, f64::NAN] {
            assert!(bt_normal_form(c, 0.0, 0.0).is_err());
            assert!(bt_regularity_determinant(c).is_err());
        }
    }

    #[test]
    fn regularity_determinant() {
        for c in [2.0, 3.0, -0.5, 0.25] {
            let expect = -(c + 1.0f64).powi(6) / c.powi(4);
            let got = bt_regularity_determinant(c).unwrap();
            assert!((got - expect).abs() < 1e-8 * expect.abs(), "{c}: {got} vs {expect}");
        }
    }

    proptest! {
        #[test]
        fn compose_agrees_with_evaluation(
            p in proptest::array::uniform6(-2.0f64..2.0),
            a in proptest::array::uniform6(-2.0f64..2.0),
            x in -2.0f64..2.0,
            y in -2.0f64..2.0,
        ) {
            let poly = Poly2 { c00: p[0], c10: p[1], c01: p[2], c20: p[3], c11: p[4], c02: p[5] };
            let lx = Affine::new(a[0], a[1], a[2]);
            let ly = Affine::new(a[3], a[4], a[5]);
            let direct = poly.eval(lx.c + lx.cx * x + lx.cy * y, ly.c + ly.cx * x + ly.cy * y);
            let composed = poly.compose(lx, ly).eval(x, y);
            prop_assert!((direct - composed).abs() < 1e-11 * (1.0 + direct.abs()));
        }
    }
}
