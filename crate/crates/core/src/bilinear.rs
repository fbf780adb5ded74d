//! Bilinear polynomials `c00 + c10·x + c01·y + c11·x·y` and the equilibria
//! of planar systems built from two of them.

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bilinear {
    pub c00: f64,
    pub c10: f64,
    pub c01: f64,
    pub c11: f64,
}

impl Bilinear {
    pub const fn new(c00: f64, c10: f64, c01: f64, c11: f64) -> Self {
        Bilinear { c00, c10, c01, c11 }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c00 + self.c10 * x + self.c01 * y + self.c11 * x * y
    }

    /// `(∂/∂x, ∂/∂y)`.
    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        [self.c10 + self.c11 * y, self.c01 + self.c11 * x]
    }

    pub fn scaled(&self, k: f64) -> Bilinear {
        Bilinear::new(k * self.c00, k * self.c10, k * self.c01, k * self.c11)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.c00, self.c10, self.c01, self.c11]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Roots {
    Points(Vec<(f64, f64)>),
    /// The two equations share a factor; equilibria form curves.
    Continuum,
}

impl Roots {
    pub fn points(&self) -> &[(f64, f64)] {
        match self {
            Roots::Points(p) => p,
            Roots::Continuum => &[],
        }
    }
}

/// Real roots of `a·x² + b·x + c`, treating a discriminant that is negative
/// only by rounding as a double root. `None` when all coefficients vanish.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<Vec<f64>> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return None;
    }
    let (a, b, c) = (a / scale, b / scale, c / scale);
    if a.abs() <= 1e-13 {
        if b.abs() <= 1e-13 {
            return Some(Vec::new());
        }
        return Some(vec![-c / b]);
    }
    let disc = b * b - 4.0 * a * c;
    let slack = 1e-12 * (b * b + (4.0 * a * c).abs());
    if disc < -slack {
        return Some(Vec::new());
    }
    if disc <= slack {
        return Some(vec![-b / (2.0 * a)]);
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some(if r1 <= r2 { vec![r1, r2] } else { vec![r2, r1] })
}

/// All real common zeros of two bilinear polynomials.
///
/// Writing each equation as `y·A(x) + B(x) = 0`, the resultant
/// `A₁B₂ − A₂B₁` is a quadratic in `x`; `y` is then recovered from whichever
/// equation is better conditioned, and every root is polished by Newton.
pub fn solve_pair(p: &Bilinear, q: &Bilinear) -> Roots {
    let (sp, sq) = (p.max_abs(), q.max_abs());
    if sp == 0.0 || sq == 0.0 {
        return Roots::Continuum;
    }
    let p = p.scaled(1.0 / sp);
    let q = q.scaled(1.0 / sq);
    // A(x) = c01 + c11·x, B(x) = c00 + c10·x.
    let a2 = p.c11 * q.c10 - q.c11 * p.c10;
    let a1 = p.c01 * q.c10 + p.c11 * q.c00 - q.c01 * p.c10 - q.c11 * p.c00;
    let a0 = p.c01 * q.c00 - q.c01 * p.c00;
    let Some(xs) = quadratic_roots(a2, a1, a0) else {
        let y_free = |b: &Bilinear| b.c01 == 0.0 && b.c11 == 0.0;
        if y_free(&p) && y_free(&q) {
            // Two vertical lines: a common line of zeros only if they agree.
            let agree = match quadratic_roots(0.0, p.c10, p.c00) {
                Some(xs) => xs.iter().any(|&x| q.eval(x, 0.0).abs() < 1e-12),
                None => true,
            };
            return if agree { Roots::Continuum } else { Roots::Points(Vec::new()) };
        }
        return Roots::Continuum;
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    for x in xs {
        let ap = p.c01 + p.c11 * x;
        let aq = q.c01 + q.c11 * x;
        let candidates: Vec<f64> = if ap.abs().max(aq.abs()) > 1e-10 {
            if ap.abs() >= aq.abs() {
                vec![-(p.c00 + p.c10 * x) / ap]
            } else {
                vec![-(q.c00 + q.c10 * x) / aq]
            }
        } else {
            // Both equations lose their y-dependence at this x: they are
            // satisfied by every y, or by none.
            let bp = p.c00 + p.c10 * x;
            let bq = q.c00 + q.c10 * x;
            if bp.abs() < 1e-10 && bq.abs() < 1e-10 {
                return Roots::Continuum;
            }
            Vec::new()
        };
        for y in candidates {
            let (x, y) = newton_polish(&p, &q, x, y);
            if p.eval(x, y).abs() > 1e-8 || q.eval(x, y).abs() > 1e-8 {
                continue;
            }
            if !out.iter().any(|&(u, v)| (u - x).hypot(v - y) < 1e-7) {
                out.push((x, y));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Roots::Points(out)
}

fn newton_polish(p: &Bilinear, q: &Bilinear, mut x: f64, mut y: f64) -> (f64, f64) {
    for _ in 0..4 {
        let (f, g) = (p.eval(x, y), q.eval(x, y));
        let [a, b] = p.grad(x, y);
        let [c, d] = q.grad(x, y);
        let det = a * d - b * c;
        if det.abs() < 1e-14 {
            break;
        }
        let dx = (d * f - b * g) / det;
        let dy = (a * g - c * f) / det;
        let (nx, ny) = (x - dx, y - dy);
        if p.eval(nx, ny).abs() + q.eval(nx, ny).abs() >= f.abs() + g.abs() {
            break;
        }
        x = nx;
        y = ny;
    }
    (x, y)
}
