//! Autonomous ODE steppers: classical RK4 and an adaptive Dormand–Prince
//! 5(4) pair with section-crossing location.

use crate::error::{Error, Result};

pub fn rk4_step<const N: usize, F>(f: &mut F, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * h, &k1))?;
    let k3 = f(&axpy(y, 0.5 * h, &k2))?;
    let k4 = f(&axpy(y, h, &k3))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, x: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * x[i];
    }
    out
}

const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince 5(4) integrator for autonomous systems.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-3,
            h_max: 0.1,
            max_steps: 2_000_000,
        }
    }
}

/// Returned by the observer after each accepted step or crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation<const N: usize> {
    Step { t: f64, y: [f64; N] },
    /// `section` went from negative to non-negative.
    Crossing { t: f64, y: [f64; N] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub stopped: bool,
}

impl Dopri5 {
    pub fn with_tol(tol: f64) -> Self {
        Dopri5 {
            rtol: tol,
            atol: tol * 1e-2,
            ..Dopri5::default()
        }
    }

    /// One step of size `h`; returns the new state and the error estimate.
    fn step<const N: usize, F>(&self, f: &mut F, y: &[f64; N], k1: &[f64; N], h: f64) -> Result<([f64; N], [f64; N], f64)>
    where
        F: FnMut(&[f64; N]) -> Result<[f64; N]>,
    {
        let mut k = [[0.0; N]; 7];
        k[0] = *k1;
        for s in 0..6 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s + 1] = f(&ys)?;
        }
        // Row 6 of A holds the fifth-order weights (first same as last).
        let mut ynew = *y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for i in 0..N {
                ynew[i] += h * A[5][j] * kj[i];
            }
        }
        let ynew_k = k[6];
        let mut err = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
            err += (h * e / sc).powi(2);
        }
        Ok((ynew, ynew_k, (err / N as f64).sqrt()))
    }

    /// Integrate from `t = 0` to `t_end > 0`.
    ///
    /// The observer sees every accepted step and every upward crossing of
    /// `section`, located by bisection on the step fraction to `1e-14`
    /// relative.
    pub fn solve<const N: usize, F, G, O>(
        &self,
        f: &mut F,
        y0: [f64; N],
        t_end: f64,
        section: Option<&G>,
        observer: &mut O,
    ) -> Result<Solution<N>>
    where
        F: FnMut(&[f64; N]) -> Result<[f64; N]>,
        G: Fn(&[f64; N]) -> f64,
        O: FnMut(Observation<N>) -> Control,
    {
        let mut t = 0.0;
        let mut y = y0;
        let mut k1 = f(&y)?;
        let mut h = self.h_init.min(t_end);
        let mut g_prev = section.map(|g| g(&y));
        let mut steps = 0;
        while t < t_end {
            if steps >= self.max_steps {
                return Err(Error::Integration(format!(
                    "adaptive step limit reached at t = {t}"
                )));
            }
            steps += 1;
            h = h.min(t_end - t).min(self.h_max);
            let (ynew, knew, err) = self.step(f, &y, &k1, h)?;
            if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
                h *= 0.2;
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::Integration(format!("step size underflow at t = {t}")));
                }
                continue;
            }
            if err > 1.0 {
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::Integration(format!("step size underflow at t = {t}")));
                }
                continue;
            }
            if let (Some(g), Some(gp)) = (section, g_prev) {
                let gn = g(&ynew);
                if gp < 0.0 && gn >= 0.0 {
                    let (tc, yc) = self.locate(f, g, &y, &k1, t, h)?;
                    if observer(Observation::Crossing { t: tc, y: yc }) == Control::Stop {
                        return Ok(Solution { t: tc, y: yc, stopped: true });
                    }
                }
                g_prev = Some(gn);
            }
            t += h;
            y = ynew;
            k1 = knew;
            if observer(Observation::Step { t, y }) == Control::Stop {
                return Ok(Solution { t, y, stopped: true });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        }
        Ok(Solution { t, y, stopped: false })
    }

    fn locate<const N: usize, F, G>(
        &self,
        f: &mut F,
        g: &G,
        y: &[f64; N],
        k1: &[f64; N],
        t: f64,
        h: f64,
    ) -> Result<(f64, [f64; N])>
    where
        F: FnMut(&[f64; N]) -> Result<[f64; N]>,
        G: Fn(&[f64; N]) -> f64,
    {
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut y_hi = self.step(f, y, k1, h)?.0;
        for _ in 0..60 {
            if (hi - lo) * h <= 1e-14 * (1.0 + t.abs()) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let ym = self.step(f, y, k1, mid * h)?.0;
            if g(&ym) >= 0.0 {
                hi = mid;
                y_hi = ym;
            } else {
                lo = mid;
            }
        }
        Ok((t + hi * h, y_hi))
    }
}
