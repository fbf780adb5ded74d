//! Filippov's convention on the codimension-one strata `{x1 = 0, x2 ≠ 0}`
//! and `{x2 = 0, x1 ≠ 0}`.

use crate::error::{Error, Result};
use crate::field::{stratum_of, PiecewiseField, SignPair, Stratum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codim1Tag {
    Sewing,
    Sliding,
    Tangency,
}

impl Codim1Tag {
    pub fn name(self) -> &'static str {
        match self {
            Codim1Tag::Sewing => "SEWING",
            Codim1Tag::Sliding => "SLIDING",
            Codim1Tag::Tangency => "TANGENCY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Codim1Class {
    pub tag: Codim1Tag,
    /// Normal component of the field on the positive side of the surface.
    pub lie_plus: f64,
    pub lie_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingCombination {
    pub rho: f64,
    pub field_value: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// `ρ` reached 0: the trajectory leaves into the positive side.
    Plus,
    /// `ρ` reached 1: the trajectory leaves into the negative side.
    Minus,
}

/// A codimension-one switching surface together with its two sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Surface {
    /// Index of the coordinate that vanishes on the surface (0 or 1).
    pub normal: usize,
    pub plus: SignPair,
    pub minus: SignPair,
}

impl Surface {
    pub fn of(stratum: Stratum) -> Option<Surface> {
        match (stratum.s1, stratum.s2) {
            (0, s2) if s2 != 0 => Some(Surface {
                normal: 0,
                plus: SignPair { s1: 1, s2 },
                minus: SignPair { s1: -1, s2 },
            }),
            (s1, 0) if s1 != 0 => Some(Surface {
                normal: 1,
                plus: SignPair { s1, s2: 1 },
                minus: SignPair { s1, s2: -1 },
            }),
            _ => None,
        }
    }

    pub fn stratum(&self) -> Stratum {
        if self.normal == 0 {
            Stratum { s1: 0, s2: self.plus.s2 }
        } else {
            Stratum { s1: self.plus.s1, s2: 0 }
        }
    }

    /// Classify from already evaluated one-sided field values.
    pub fn classify_values(&self, xp: &[f64; 3], xm: &[f64; 3]) -> Codim1Class {
        let lie_plus = xp[self.normal];
        let lie_minus = xm[self.normal];
        let tag = if is_tangent(lie_plus, xp) || is_tangent(lie_minus, xm) {
            Codim1Tag::Tangency
        } else if lie_plus * lie_minus > 0.0 {
            Codim1Tag::Sewing
        } else {
            Codim1Tag::Sliding
        };
        Codim1Class {
            tag,
            lie_plus,
            lie_minus,
        }
    }

    /// `ρ` and the convex combination `(1-ρ)X₊ + ρX₋`.
    pub fn combine(&self, xp: &[f64; 3], xm: &[f64; 3]) -> Result<SlidingCombination> {
        let (fp, fm) = (xp[self.normal], xm[self.normal]);
        let denom = fp - fm;
        if denom.abs() <= 1e-9 * (1.0 + norm(xp) + norm(xm)) {
            return Err(Error::Tangency);
        }
        let rho = fp / denom;
        let mut field_value = [0.0; 3];
        for i in 0..3 {
            field_value[i] = (1.0 - rho) * xp[i] + rho * xm[i];
        }
        Ok(SlidingCombination { rho, field_value })
    }
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn is_tangent(lie: f64, field: &[f64; 3]) -> bool {
    lie.abs() < 1e-9 * (1.0 + norm(field))
}

fn surface_at(p: &[f64; 3], tol: f64) -> Result<Surface> {
    Surface::of(stratum_of(p, tol)).ok_or(Error::NotCodim1(*p))
}

/// Classify a point of `Σ₀±` or `Σ±₀` as sewing, sliding or tangency.
///
/// Points within `tol` of both planes are refused: there the pairwise
/// convention does not apply and the codimension-two analysis takes over.
pub fn classify_codim1(pw: &PiecewiseField, p: &[f64; 3], tol: f64) -> Result<Codim1Class> {
    let surface = surface_at(p, tol)?;
    let xp = pw.eval(surface.plus, p)?;
    let xm = pw.eval(surface.minus, p)?;
    Ok(surface.classify_values(&xp, &xm))
}

pub fn sliding_field_codim1(
    pw: &PiecewiseField,
    p: &[f64; 3],
    tol: f64,
) -> Result<SlidingCombination> {
    let surface = surface_at(p, tol)?;
    let xp = pw.eval(surface.plus, p)?;
    let xm = pw.eval(surface.minus, p)?;
    surface.combine(&xp, &xm)
}

pub fn exit_condition(rho: f64, tol: f64) -> Option<Exit> {
    if rho <= tol {
        Some(Exit::Plus)
    } else if rho >= 1.0 - tol {
        Some(Exit::Minus)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
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

    #[test]
    fn symmetric_field_slides_at_midpoint() {
        let pw = constant_sliding();
        let c = classify_codim1(&pw, &[0.0, 1.0, 0.0], 1e-9).unwrap();
        assert_eq!(c.tag, Codim1Tag::Sliding);
        assert_eq!((c.lie_plus, c.lie_minus), (-1.0, 1.0));
        let s = sliding_field_codim1(&pw, &[0.0, 1.0, 0.0], 1e-9).unwrap();
        assert_eq!(s.rho, 0.5);
        assert_eq!(s.field_value, [0.0, -1.0, 1.0]);
    }

    #[test]
    fn sewing_on_positive_x1_axis() {
        let c = classify_codim1(&cross_slide(), &[1.0, 0.0, 0.0], 1e-9).unwrap();
        assert_eq!(c.tag, Codim1Tag::Sewing);
        assert_eq!(c.lie_plus, -59.0 / 900.0);
        assert_eq!(c.lie_minus, -59.0 / 900.0);
    }

    #[test]
    fn sliding_on_negative_x2_axis() {
        let pw = cross_slide();
        let p = [0.0, -0.3, 0.0];
        let c = classify_codim1(&pw, &p, 1e-9).unwrap();
        assert_eq!(c.tag, Codim1Tag::Sliding);
        assert_eq!(c.lie_plus, -623.0 / 1800.0);
        assert_eq!(c.lie_minus, 277.0 / 1800.0);
        let s = sliding_field_codim1(&pw, &p, 1e-9).unwrap();
        assert!((s.rho - 623.0 / 900.0).abs() < 1e-15);
        let expected = [0.0, 1187.0 / 900.0, 1.0];
        for (v, e) in s.field_value.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn refuses_points_off_codim1_strata() {
        let pw = constant_sliding();
        assert!(matches!(
            classify_codim1(&pw, &[0.0, 1e-12, 0.0], 1e-9),
            Err(Error::NotCodim1(_))
        ));
        assert!(classify_codim1(&pw, &[0.3, 0.2, 0.0], 1e-9).is_err());
    }

    #[test]
    fn tangency_is_reported() {
        let pw = PiecewiseField::from_constants([
            [0.0, 1.0, 1.0],
            [0.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
        ]);
        let c = classify_codim1(&pw, &[0.0, 1.0, 0.0], 1e-9).unwrap();
        assert_eq!(c.tag, Codim1Tag::Tangency);
        let parallel = PiecewiseField::from_constants([[1.0, 0.0, 0.0]; 4]);
        assert_eq!(
            sliding_field_codim1(&parallel, &[0.0, 1.0, 0.0], 1e-9),
            Err(Error::Tangency)
        );
    }

    #[test]
    fn exits() {
        assert_eq!(exit_condition(0.5, 1e-9), None);
        assert_eq!(exit_condition(-1e-12, 1e-9), Some(Exit::Plus));
        assert_eq!(exit_condition(1.0 + 1e-12, 1e-9), Some(Exit::Minus));
    }

    proptest! {
        #[test]
        fn sliding_field_is_tangent_and_convex(
            fp in 0.01f64..5.0, fm in 0.01f64..5.0,
            rest in proptest::array::uniform4(-5.0f64..5.0),
            on_x1 in any::<bool>(), side in any::<bool>(),
        ) {
            // Opposing normal components force sliding.
            let (xp, xm, surface) = if on_x1 {
                let s2 = if side { 1 } else { -1 };
                ([-fp, rest[0], rest[1]], [fm, rest[2], rest[3]], Surface::of(Stratum { s1: 0, s2 }).unwrap())
            } else {
                let s1 = if side { 1 } else { -1 };
                ([rest[0], -fp, rest[1]], [rest[2], fm, rest[3]], Surface::of(Stratum { s1, s2: 0 }).unwrap())
            };
            prop_assert_eq!(surface.classify_values(&xp, &xm).tag, Codim1Tag::Sliding);
            let c = surface.combine(&xp, &xm).unwrap();
            prop_assert!((0.0..=1.0).contains(&c.rho));
            prop_assert!(c.field_value[surface.normal].abs() <= 1e-12);
            for i in 0..3 {
                let lo = xp[i].min(xm[i]) - 1e-12;
                let hi = xp[i].max(xm[i]) + 1e-12;
                prop_assert!(c.field_value[i] >= lo && c.field_value[i] <= hi);
            }
        }
    }
}
