//! Event-driven integration of Filippov trajectories, integration of the
//! regularized field, and the convergence probe.
//!
//! Piecewise trajectories use fixed-step RK4 in the active mode. Crossings of
//! the switching planes and sliding exits are bracketed within a step and
//! located by bisection on the step fraction. Sliding on a codimension-one
//! stratum is integrated with the sliding coordinate held at exactly zero.
//! On `Σ00` the state is pinned to `x1 = x2 = 0` and `x3` follows
//! [`codim2_drift`].

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};

use crate::codim2::{approximate_verdict, codim2_drift, sliding_verdict, VerdictTag};
use crate::error::{Error, Result};
use crate::field::{stratum_of, PiecewiseField, SignPair, Transition};
use crate::filippov::Surface;
use crate::ode::rk4_step;
use crate::regularization::{regularized_eval, Regime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Flow(SignPair),
    /// Filippov sliding on a codimension-one stratum.
    Slide(Surface),
    /// On `Σ00`.
    Pinned,
    /// Smooth regularized field.
    Regularized,
}

impl Mode {
    pub fn label(&self) -> String {
        match self {
            Mode::Flow(q) => format!("FLOW({})", q.label()),
            Mode::Slide(s) => format!("SLIDE({})", s.stratum().label()),
            Mode::Pinned => "PINNED(00)".into(),
            Mode::Regularized => "REGULARIZED".into(),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    EndTime,
    /// Too many events in a short time window.
    Chatter,
    Tangency,
    /// Both one-sided fields point away from a codimension-one stratum.
    RepellingSliding,
    /// The codimension-two analysis did not certify sliding on `Σ00`.
    NoSliding(String),
    /// The drift on `Σ00` stopped being defined; exits are not analysed.
    DriftUndefined,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::EndTime => "END",
            StopReason::Chatter => "CHATTER",
            StopReason::Tangency => "TANGENCY",
            StopReason::RepellingSliding => "REPELLING_SLIDING",
            StopReason::NoSliding(_) => "NO_SLIDING",
            StopReason::DriftUndefined => "DRIFT_UNDEFINED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Cross,
    SlideEnter,
    SlideExit,
    PinSigma00,
    Unpin,
    Stop(StopReason),
}

impl EventKind {
    pub fn label(&self) -> String {
        match self {
            EventKind::Cross => "CROSS".into(),
            EventKind::SlideEnter => "SLIDE_ENTER".into(),
            EventKind::SlideExit => "SLIDE_EXIT".into(),
            EventKind::PinSigma00 => "PIN_SIGMA00".into(),
            EventKind::Unpin => "UNPIN".into(),
            EventKind::Stop(r) => format!("STOP({})", r.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub x: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub x: [f64; 3],
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub step: f64,
    /// Width of the final bisection bracket, in time.
    pub event_tol: f64,
    /// Regime for the codimension-two verdict and drift.
    pub regime: Regime,
    /// Stop after this many events within `10·event_tol`.
    pub chatter_events: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            step: 1e-3,
            event_tol: 1e-10,
            regime: Regime::default(),
            chatter_events: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<TrajectoryState>,
    pub events: Vec<Event>,
    pub options: Options,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryState {
        self.states.last().expect("trajectories start with a state")
    }

    pub fn stop_reason(&self) -> Option<&StopReason> {
        self.events.iter().rev().find_map(|e| match &e.kind {
            EventKind::Stop(r) => Some(r),
            _ => None,
        })
    }
}

enum Landing {
    Continue(Mode, Option<EventKind>),
    Stop(StopReason),
}

struct Piecewise<'a> {
    pw: &'a PiecewiseField,
    opts: Options,
    events: Vec<Event>,
    recent: VecDeque<f64>,
}

impl<'a> Piecewise<'a> {
    fn sliding_field(&self, surface: &Surface, x: &[f64; 3]) -> Result<[f64; 3]> {
        let mut p = *x;
        p[surface.normal] = 0.0;
        let xp = self.pw.eval(surface.plus, &p)?;
        let xm = self.pw.eval(surface.minus, &p)?;
        let mut v = surface.combine(&xp, &xm)?.field_value;
        v[surface.normal] = 0.0;
        Ok(v)
    }

    fn advance(&self, mode: Mode, x: &[f64; 3], h: f64) -> Result<[f64; 3]> {
        let out = match mode {
            Mode::Flow(q) => rk4_step(&mut |p: &[f64; 3]| self.pw.eval(q, p), x, h)?,
            Mode::Slide(s) => {
                let mut y = rk4_step(&mut |p: &[f64; 3]| self.sliding_field(&s, p), x, h)?;
                y[s.normal] = 0.0;
                y
            }
            Mode::Pinned => {
                let regime = self.opts.regime;
                let mut f = |z: &[f64; 1]| Ok([codim2_drift(self.pw, z[0], regime)?]);
                [0.0, 0.0, rk4_step(&mut f, &[x[2]], h)?[0]]
            }
            Mode::Regularized => unreachable!("regularized runs use their own loop"),
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration(format!(
                "state is no longer finite after a step from {x:?}"
            )));
        }
        Ok(out)
    }

    /// Event functions of the mode; each is positive while the mode is valid.
    fn guards(&self, mode: Mode, x: &[f64; 3]) -> Result<Vec<f64>> {
        Ok(match mode {
            Mode::Flow(q) => vec![q.f1() * x[0], q.f2() * x[1]],
            Mode::Slide(s) => {
                let m = 1 - s.normal;
                let side = if m == 0 { s.plus.f1() } else { s.plus.f2() };
                let mut p = *x;
                p[s.normal] = 0.0;
                let fp = self.pw.eval(s.plus, &p)?[s.normal];
                let fm = self.pw.eval(s.minus, &p)?[s.normal];
                // ρ reaches 0 when fp does, 1 when fm does.
                vec![side * x[m], -fp, fm]
            }
            Mode::Pinned | Mode::Regularized => Vec::new(),
        })
    }

    /// Resolve the mode at a point whose switching coordinates are either
    /// exactly zero or clearly nonzero.
    fn land(&self, x: &[f64; 3]) -> Result<Landing> {
        let st = stratum_of(x, 0.0);
        match st.codimension() {
            0 => Ok(Landing::Continue(Mode::Flow(st.quadrant().expect("open quadrant")), None)),
            1 => {
                let s = Surface::of(st).expect("codimension one");
                let xp = self.pw.eval(s.plus, x)?;
                let xm = self.pw.eval(s.minus, x)?;
                let (fp, fm) = (xp[s.normal], xm[s.normal]);
                let c = s.classify_values(&xp, &xm);
                use crate::filippov::Codim1Tag::*;
                Ok(match c.tag {
                    Sewing => {
                        let side = if fp > 0.0 { s.plus } else { s.minus };
                        Landing::Continue(Mode::Flow(side), Some(EventKind::Cross))
                    }
                    Sliding if fp < 0.0 && fm > 0.0 => {
                        Landing::Continue(Mode::Slide(s), Some(EventKind::SlideEnter))
                    }
                    Sliding => Landing::Stop(StopReason::RepellingSliding),
                    Tangency => Landing::Stop(StopReason::Tangency),
                })
            }
            _ => {
                let verdict = if self.pw.is_constant() {
                    sliding_verdict(self.pw, self.opts.regime)?
                } else {
                    approximate_verdict(self.pw, x[2], self.opts.regime)?
                };
                if verdict.tag != VerdictTag::Sliding {
                    let mut why = verdict.tag.name().to_string();
                    if let Some(n) = verdict.note {
                        why = format!("{why}: {n}");
                    }
                    return Ok(Landing::Stop(StopReason::NoSliding(why)));
                }
                Ok(match codim2_drift(self.pw, x[2], self.opts.regime) {
                    Ok(_) => Landing::Continue(Mode::Pinned, Some(EventKind::PinSigma00)),
                    Err(Error::UndefinedDrift) => Landing::Stop(StopReason::DriftUndefined),
                    Err(e) => return Err(e),
                })
            }
        }
    }

    /// Record an event; returns `true` if the chatter guard fired.
    fn push_event(&mut self, kind: EventKind, t: f64, x: [f64; 3]) -> bool {
        self.events.push(Event { kind, t, x });
        let window = 10.0 * self.opts.event_tol;
        self.recent.push_back(t);
        while self.recent.front().is_some_and(|&t0| t0 < t - window) {
            self.recent.pop_front();
        }
        self.recent.len() >= self.opts.chatter_events
    }
}

/// Integrate a Filippov trajectory of `pw` from `x0` up to `tmax`.
///
/// Switching coordinates of `x0` within `event_tol` of zero are snapped to
/// zero. The last event is always a `STOP`.
pub fn integrate_piecewise(
    pw: &PiecewiseField,
    x0: [f64; 3],
    tmax: f64,
    opts: &Options,
) -> Result<Trajectory> {
    if !(opts.step > 0.0 && opts.event_tol > 0.0 && tmax >= 0.0) {
        return Err(Error::InvalidArgument(
            "step and event tolerance must be positive and tmax non-negative".into(),
        ));
    }
    let mut sim = Piecewise {
        pw,
        opts: *opts,
        events: Vec::new(),
        recent: VecDeque::new(),
    };
    let mut x = x0;
    for v in x.iter_mut().take(2) {
        if v.abs() <= opts.event_tol {
            *v = 0.0;
        }
    }
    let mut t = 0.0;
    let mut states = Vec::new();
    let mut mode = match sim.land(&x)? {
        Landing::Continue(m, _) => m,
        Landing::Stop(r) => {
            states.push(TrajectoryState { t, x, mode: Mode::Flow(SignPair::PP) });
            sim.push_event(EventKind::Stop(r), t, x);
            return Ok(Trajectory { states, events: sim.events, options: *opts });
        }
    };
    states.push(TrajectoryState { t, x, mode });

    let max_iter = 10 * ((tmax / opts.step).ceil() as usize + 1) + 1_000_000;
    for _ in 0..max_iter {
        if tmax - t <= 1e-12 * tmax.max(1.0) {
            sim.push_event(EventKind::Stop(StopReason::EndTime), t, x);
            return Ok(Trajectory { states, events: sim.events, options: *opts });
        }
        let h = opts.step.min(tmax - t);
        let full = sim.advance(mode, &x, h)?;
        let g_end = sim.guards(mode, &full)?;
        if g_end.iter().all(|&g| g > 0.0) {
            t += h;
            x = full;
            states.push(TrajectoryState { t, x, mode });
            continue;
        }
        // Bisection for the first fraction of the step at which a guard
        // is non-positive.
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x_hi = full;
        let mut g_hi = g_end;
        while (hi - lo) * h > opts.event_tol {
            let mid = 0.5 * (lo + hi);
            let xm = sim.advance(mode, &x, mid * h)?;
            let gm = sim.guards(mode, &xm)?;
            if gm.iter().any(|&g| g <= 0.0) {
                hi = mid;
                x_hi = xm;
                g_hi = gm;
            } else {
                lo = mid;
            }
        }
        t += hi * h;
        x = x_hi;
        let snap = opts.event_tol * (1.0 + norm(&pw.eval_all(&x)?.map(|v| norm(&v))));
        let landing = match mode {
            Mode::Flow(_) => {
                for i in 0..2 {
                    if g_hi[i] <= 0.0 || x[i].abs() <= snap {
                        x[i] = 0.0;
                    }
                }
                sim.land(&x)?
            }
            Mode::Slide(s) => {
                let m = 1 - s.normal;
                if g_hi[0] <= 0.0 || x[m].abs() <= snap {
                    x[m] = 0.0;
                    sim.land(&x)?
                } else if g_hi[1] <= 0.0 {
                    Landing::Continue(Mode::Flow(s.plus), Some(EventKind::SlideExit))
                } else {
                    Landing::Continue(Mode::Flow(s.minus), Some(EventKind::SlideExit))
                }
            }
            Mode::Pinned | Mode::Regularized => unreachable!("no guards"),
        };
        match landing {
            Landing::Continue(m, ev) => {
                mode = m;
                states.push(TrajectoryState { t, x, mode });
                if let Some(kind) = ev {
                    if sim.push_event(kind, t, x) {
                        sim.push_event(EventKind::Stop(StopReason::Chatter), t, x);
                        return Ok(Trajectory { states, events: sim.events, options: *opts });
                    }
                }
            }
            Landing::Stop(r) => {
                states.push(TrajectoryState { t, x, mode });
                sim.push_event(EventKind::Stop(r), t, x);
                return Ok(Trajectory { states, events: sim.events, options: *opts });
            }
        }
        if mode == Mode::Pinned {
            // Pinned integration cannot raise guards; check the drift as we go.
            if let Err(Error::UndefinedDrift) = codim2_drift(pw, x[2], opts.regime) {
                sim.push_event(EventKind::Unpin, t, x);
                sim.push_event(EventKind::Stop(StopReason::DriftUndefined), t, x);
                return Ok(Trajectory { states, events: sim.events, options: *opts });
            }
        }
    }
    Err(Error::Integration(format!("iteration limit reached at t = {t}")))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedOptions {
    pub step: f64,
    /// A step is rejected as too stiff when one full RK4 step and two half
    /// steps differ by more than `1e3·tol` relative to `1 + |x|`.
    pub tol: f64,
}

impl Default for RegularizedOptions {
    fn default() -> Self {
        RegularizedOptions { step: 1e-3, tol: 1e-6 }
    }
}

/// Plain RK4 on the regularized field `X_{ε,η}`.
pub fn integrate_regularized(
    pw: &PiecewiseField,
    phi: Transition,
    eps: f64,
    eta: f64,
    x0: [f64; 3],
    tmax: f64,
    opts: &RegularizedOptions,
) -> Result<Trajectory> {
    if !(eps > 0.0 && eta > 0.0) {
        return Err(Error::InvalidArgument("ε and η must be positive".into()));
    }
    if !(opts.step > 0.0 && tmax >= 0.0) {
        return Err(Error::InvalidArgument("step must be positive and tmax non-negative".into()));
    }
    let mut f = |p: &[f64; 3]| regularized_eval(pw, phi, eps, eta, p);
    let mut t = 0.0;
    let mut x = x0;
    let mode = Mode::Regularized;
    let mut states = vec![TrajectoryState { t, x, mode }];
    let n = (tmax / opts.step * (1.0 - 1e-12)).ceil() as usize;
    for i in 0..n {
        let h = if i + 1 == n { tmax - i as f64 * opts.step } else { opts.step };
        let full = rk4_step(&mut f, &x, h)?;
        let mid = rk4_step(&mut f, &x, 0.5 * h)?;
        let half = rk4_step(&mut f, &mid, 0.5 * h)?;
        let diff = norm(&[full[0] - half[0], full[1] - half[1], full[2] - half[2]]);
        let rel = diff / (1.0 + norm(&half));
        if !rel.is_finite() || rel > 1e3 * opts.tol {
            return Err(Error::Integration(format!(
                "step {} is too large at t = {t}: the regularized field is stiff of order \
                 1/min(ε, η) = {}; try a step below {}",
                opts.step,
                1.0 / eps.min(eta),
                0.5 * eps.min(eta)
            )));
        }
        x = full;
        t = if i + 1 == n { tmax } else { (i + 1) as f64 * opts.step };
        states.push(TrajectoryState { t, x, mode });
    }
    let events = vec![Event {
        kind: EventKind::Stop(StopReason::EndTime),
        t,
        x,
    }];
    Ok(Trajectory {
        states,
        events,
        options: Options {
            step: opts.step,
            ..Options::default()
        },
    })
}

/// Largest `√(x1² + x2²)` over the trailing 20% of a run.
pub fn band_distance(traj: &Trajectory, tmax: f64) -> f64 {
    traj.states
        .iter()
        .filter(|s| s.t >= 0.8 * tmax)
        .map(|s| s.x[0].hypot(s.x[1]))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub eps: f64,
    pub eta: f64,
    pub distance: f64,
}

pub fn probe_distance(
    pw: &PiecewiseField,
    phi: Transition,
    eps: f64,
    eta: f64,
    x0: [f64; 3],
    tmax: f64,
    opts: &RegularizedOptions,
) -> Result<ProbeRow> {
    let traj = integrate_regularized(pw, phi, eps, eta, x0, tmax, opts)?;
    Ok(ProbeRow {
        eps,
        eta,
        distance: band_distance(&traj, tmax),
    })
}

pub fn convergence_probe(
    pw: &PiecewiseField,
    phi: Transition,
    x0: [f64; 3],
    pairs: &[(f64, f64)],
    tmax: f64,
    opts: &RegularizedOptions,
) -> Result<Vec<ProbeRow>> {
    pairs
        .iter()
        .map(|&(eps, eta)| probe_distance(pw, phi, eps, eta, x0, tmax, opts))
        .collect()
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    writeln!(w, "t,x1,x2,x3,mode")?;
    for s in &traj.states {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{}",
            s.t, s.x[0], s.x[1], s.x[2], s.mode
        )?;
    }
    Ok(())
}

pub fn write_events_csv<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    writeln!(w, "t,kind,x1,x2,x3")?;
    for e in &traj.events {
        writeln!(
            w,
            "{:.16e},{},{:.16e},{:.16e},{:.16e}",
            e.t,
            e.kind.label(),
            e.x[0],
            e.x[1],
            e.x[2]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Stratum;

    fn cross_slide() -> PiecewiseField {
        PiecewiseField::from_constants([
            [277.0 / 1800.0, -59.0 / 900.0, 1.0],
            [-623.0 / 1800.0, -59.0 / 900.0, 1.0],
            [-623.0 / 1800.0, -59.0 / 900.0, 1.0],
            [277.0 / 1800.0, 1741.0 / 900.0, 1.0],
        ])
    }

    fn constant_sliding() -> PiecewiseField {
        let mut v = [[0.0; 3]; 4];
        for s in SignPair::ALL {
            v[s.index()] = [-s.f1(), -s.f2(), 1.0];
        }
        PiecewiseField::from_constants(v)
    }

    #[test]
    fn cross_slide_event_sequence() {
        let traj = integrate_piecewise(&cross_slide(), [0.5, 0.5, 0.0], 14.0, &Options::default()).unwrap();
        let kinds: Vec<String> = traj.events.iter().map(|e| e.kind.label()).collect();
        assert_eq!(kinds, ["CROSS", "SLIDE_ENTER", "PIN_SIGMA00", "STOP(END)"]);
        let expect = [
            (450.0 / 59.0, [395.0 / 236.0, 0.0]),
            (458100.0 / 36757.0, [0.0, -395.0 / 1246.0]),
            (1779300.0 / 140066.0, [0.0, 0.0]),
        ];
        for (e, (t, p)) in traj.events.iter().zip(expect) {
            assert!((e.t - t).abs() < 1e-6, "{} vs {t}", e.t);
            assert!((e.x[0] - p[0]).abs() < 1e-6 && (e.x[1] - p[1]).abs() < 1e-6);
            assert!((e.x[2] - e.t).abs() < 1e-9);
        }
        // Drift on Σ00 is 1, so x3 keeps tracking t.
        let last = traj.last();
        assert_eq!(last.mode, Mode::Pinned);
        assert!((last.t - 14.0).abs() < 1e-12 && (last.x[2] - 14.0).abs() < 1e-9);
    }

    #[test]
    fn sliding_is_confined() {
        let traj = integrate_piecewise(&cross_slide(), [0.5, 0.5, 0.0], 13.0, &Options::default()).unwrap();
        let mut sliding = 0;
        for s in &traj.states {
            match s.mode {
                Mode::Slide(surf) => {
                    sliding += 1;
                    assert_eq!(s.x[surf.normal], 0.0);
                    assert_eq!(surf.stratum(), Stratum { s1: 0, s2: -1 });
                }
                Mode::Flow(q) => {
                    let st = stratum_of(&s.x, 0.0);
                    if st.codimension() == 0 {
                        assert_eq!(st.quadrant(), Some(q));
                    }
                }
                Mode::Pinned => assert_eq!((s.x[0], s.x[1]), (0.0, 0.0)),
                Mode::Regularized => unreachable!(),
            }
        }
        assert!(sliding > 100);
        for w in traj.events.windows(2) {
            assert!(w[0].t < w[1].t);
        }
    }

    #[test]
    fn sliding_exit_when_rho_leaves_the_interval() {
        // On Σ0+ the left field pushes right, the right field pushes left
        // only while x2 < 1: ρ reaches 0 at x2 = 1.
        let pw = PiecewiseField::new([
            crate::field::SmoothField3::new(
                crate::parse_expression("x2 - 1").unwrap(),
                crate::parse_expression("1").unwrap(),
                crate::parse_expression("0").unwrap(),
            ),
            crate::field::SmoothField3::constant([-1.0, 1.0, 0.0]),
            crate::field::SmoothField3::constant([1.0, 1.0, 0.0]),
            crate::field::SmoothField3::constant([1.0, 1.0, 0.0]),
        ]);
        let traj = integrate_piecewise(&pw, [0.0, 0.5, 0.0], 1.0, &Options::default()).unwrap();
        let kinds: Vec<String> = traj.events.iter().map(|e| e.kind.label()).collect();
        assert_eq!(kinds, ["SLIDE_EXIT", "STOP(END)"]);
        let exit = &traj.events[0];
        assert!((exit.t - 0.5).abs() < 1e-8 && (exit.x[1] - 1.0).abs() < 1e-8);
        assert!(matches!(traj.last().mode, Mode::Flow(q) if q == SignPair::PP));
        assert!(traj.last().x[0] > 0.0);
    }

    #[test]
    fn repelling_sliding_and_missing_verdict_stop() {
        let mut v = [[0.0; 3]; 4];
        for s in SignPair::ALL {
            v[s.index()] = [s.f1(), -s.f2(), 1.0];
        }
        let pw = PiecewiseField::from_constants(v);
        let traj = integrate_piecewise(&pw, [0.0, 1.0, 0.0], 1.0, &Options::default()).unwrap();
        assert_eq!(traj.stop_reason(), Some(&StopReason::RepellingSliding));

        // Σ00 reached in region I of the C = 2 family: no equilibrium.
        let (da, db) = (0.025, 0.025);
        let pw = PiecewiseField::from_constants([
            [5.0 / 36.0 - da, -1.0 / 18.0 - db, 1.0],
            [-13.0 / 36.0 - da, -1.0 / 18.0 - db, 1.0],
            [-13.0 / 36.0 - da, -1.0 / 18.0 - db, 1.0],
            [5.0 / 36.0 - da, 35.0 / 18.0 - db, 1.0],
        ]);
        let traj = integrate_piecewise(&pw, [0.5, 0.5, 0.0], 30.0, &Options::default()).unwrap();
        assert!(matches!(traj.stop_reason(), Some(StopReason::NoSliding(_))), "{:?}", traj.events);
    }

    #[test]
    fn chatter_guard_fires() {
        let pw = cross_slide();
        let mut sim = Piecewise {
            pw: &pw,
            opts: Options::default(),
            events: Vec::new(),
            recent: VecDeque::new(),
        };
        for i in 0..99 {
            assert!(!sim.push_event(EventKind::Cross, 1.0 + i as f64 * 1e-12, [0.0; 3]));
        }
        assert!(sim.push_event(EventKind::Cross, 1.0 + 99e-12, [0.0; 3]));
        // Spread out in time the same count is fine.
        sim.recent.clear();
        for i in 0..200 {
            assert!(!sim.push_event(EventKind::Cross, 2.0 + i as f64 * 1e-8, [0.0; 3]));
        }
    }

    #[test]
    fn regularized_constant_sliding_enters_the_band() {
        let opts = RegularizedOptions::default();
        for eps in [0.1, 0.01] {
            let traj =
                integrate_regularized(&constant_sliding(), Transition::default(), eps, eps, [1.0, 1.0, 0.0], 5.0, &opts)
                    .unwrap();
            let last = traj.last();
            assert!(last.x[0].abs() < eps && last.x[1].abs() < eps);
            assert!((last.t - 5.0).abs() < 1e-12 && (last.x[2] - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn regularized_matches_single_field_outside_the_bands() {
        let pw = PiecewiseField::new([
            crate::field::SmoothField3::new(
                crate::parse_expression("x2").unwrap(),
                crate::parse_expression("-x1").unwrap(),
                crate::parse_expression("x3").unwrap(),
            ),
            crate::field::SmoothField3::constant([0.0, 0.0, 0.0]),
            crate::field::SmoothField3::constant([0.0, 0.0, 0.0]),
            crate::field::SmoothField3::constant([0.0, 0.0, 0.0]),
        ]);
        let x0 = [2.0, 2.0, 0.5];
        let opts = RegularizedOptions { step: 0.01, tol: 1e-6 };
        let traj = integrate_regularized(&pw, Transition::default(), 0.1, 0.1, x0, 0.5, &opts).unwrap();
        let mut f = |p: &[f64; 3]| pw.eval(SignPair::PP, p);
        let mut x = x0;
        for s in &traj.states[1..] {
            x = rk4_step(&mut f, &x, 0.01).unwrap();
            assert_eq!(s.x, x);
        }
    }

    #[test]
    fn stiff_step_is_rejected() {
        let opts = RegularizedOptions { step: 0.5, tol: 1e-6 };
        let err = integrate_regularized(&constant_sliding(), Transition::default(), 0.01, 0.01, [1.0, 1.0, 0.0], 5.0, &opts)
            .unwrap_err();
        assert!(matches!(err, Error::Integration(m) if m.contains("stiff")));
    }

    #[test]
    fn probe_shrinks_for_constant_sliding() {
        let rows = convergence_probe(
            &constant_sliding(),
            Transition::default(),
            [1.0, 1.0, 0.0],
            &[(0.1, 0.1), (0.05, 0.05), (0.01, 0.01)],
            5.0,
            &RegularizedOptions::default(),
        )
        .unwrap();
        for w in rows.windows(2) {
            assert!(w[1].distance < w[0].distance);
        }
        for r in &rows {
            assert!(r.distance <= r.eps);
        }
    }

    #[test]
    fn probe_of_a_frozen_plane_is_constant() {
        let pw = PiecewiseField::from_constants([[0.0, 0.0, 1.0]; 4]);
        let rows = convergence_probe(
            &pw,
            Transition::default(),
            [0.3, 0.4, 0.0],
            &[(0.1, 0.1), (0.01, 0.01)],
            1.0,
            &RegularizedOptions::default(),
        )
        .unwrap();
        for r in rows {
            assert!((r.distance - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_has_fixed_headers_and_precision() {
        let traj = integrate_piecewise(&cross_slide(), [0.5, 0.5, 0.0], 8.0, &Options::default()).unwrap();
        let mut buf = Vec::new();
        write_events_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,kind,x1,x2,x3"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[1], "CROSS");
        assert!(first[0].starts_with("7.627118644"), "{}", first[0]);
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x1,x2,x3,mode\n0.0000000000000000e0,5.0000000000000000e-1"));
    }
}
