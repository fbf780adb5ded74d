use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use slidecross::codim2::{
    approximate_verdict, indicator_verdict, sliding_verdict, EquilibriumReport, EquilibriumType,
    SlidingVerdict, Stability, VerdictTag,
};
use slidecross::filippov::{classify_codim1, sliding_field_codim1, Codim1Tag};
use slidecross::integrator::{
    integrate_piecewise, integrate_regularized, probe_distance, write_events_csv,
    write_trajectory_csv, Options, RegularizedOptions, StopReason, Trajectory,
};
use slidecross::model::{load_model, Model};
use slidecross::quadratic::normal_form::{bt_normal_form, bt_regularity_determinant};
use slidecross::quadratic::regions::bifurcation_region;
use slidecross::quadratic::{affine_normalize, center_check, CaseTag, QuadSystem};
use slidecross::regularization::{
    reduced_bilinear_system, BilinearXY, CenteredForm, FactoredForm, Scaling, SlowSystem,
};
use slidecross::{stratum_of, PiecewiseField, Regime};

use crate::args::Grid;
use crate::report::{num, pair, triple, Report};
use crate::{CliError, Command, ModelArgs, Status, VerdictArgs};

type Result<T> = std::result::Result<T, CliError>;

pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<Status> {
    match cmd {
        Command::Classify { model, point, tol, verdict } => {
            let m = load(model)?;
            let (report, status) = classify(&m.field, point, *tol, verdict)?;
            emit(out, &header(&model.model, &m).to_string())?;
            emit(out, &report.to_string())?;
            Ok(status)
        }
        Command::Reduce { model, regime, x3 } => {
            let m = load(model)?;
            emit(out, &header(&model.model, &m).to_string())?;
            emit(out, &reduce(&m.field, *regime, *x3)?.to_string())?;
            Ok(Status::Done)
        }
        Command::Verdict { model, verdict } => {
            let m = load(model)?;
            let (report, tag) = verdict_report(&m.field, verdict)?;
            emit(out, &header(&model.model, &m).to_string())?;
            emit(out, &report.to_string())?;
            Ok(status_of(tag))
        }
        Command::NormalForm { model, params, system, x3 } => {
            let q = match (model, system) {
                (_, Some(list)) => system_from_list(&list.0)?,
                (Some(path), None) => {
                    let m = load(&ModelArgs { model: path.clone(), params: params.clone() })?;
                    emit(out, &header(path, &m).to_string())?;
                    quad_from_field(&m.field, *x3)?
                }
                (None, None) => return Err(CliError::Usage("give a model file or --system".into())),
            };
            emit(out, &normal_form(&q)?.to_string())?;
            Ok(Status::Done)
        }
        Command::Regions { grid, out: path } => {
            let rows = regions(grid)?;
            match path {
                Some(p) => write_file(p, |w| w.write_all(rows.as_bytes()))?,
                None => emit(out, &rows)?,
            }
            Ok(Status::Done)
        }
        Command::Simulate {
            model,
            x0,
            tmax,
            step,
            event_tol,
            regime,
            regularize,
            transition,
            out: path,
            events,
        } => {
            let m = load(model)?;
            let traj = match regularize {
                Some((eps, eta)) => {
                    let opts = RegularizedOptions { step: *step, ..RegularizedOptions::default() };
                    integrate_regularized(&m.field, *transition, *eps, *eta, *x0, *tmax, &opts)?
                }
                None => {
                    let opts = Options {
                        step: *step,
                        event_tol: *event_tol,
                        regime: *regime,
                        ..Options::default()
                    };
                    integrate_piecewise(&m.field, *x0, *tmax, &opts)?
                }
            };
            write_file(path, |w| write_trajectory_csv(&traj, w))?;
            match events {
                Some(p) => write_file(p, |w| write_events_csv(&traj, w))?,
                None => {
                    let mut buf = Vec::new();
                    write_events_csv(&traj, &mut buf).map_err(|e| CliError::io("<stdout>", e))?;
                    out.write_all(&buf).map_err(|e| CliError::io("<stdout>", e))?;
                }
            }
            Ok(simulation_status(&traj))
        }
        Command::Probe { model, eps_list, eta_list, x0, tmax, step, transition, out: path } => {
            let m = load(model)?;
            let eta = eta_list.as_ref().map_or(&eps_list.0, |l| &l.0);
            if eta.len() != eps_list.0.len() {
                return Err(CliError::Usage(format!(
                    "--eps-list has {} entries but --eta-list has {}",
                    eps_list.0.len(),
                    eta.len()
                )));
            }
            let pairs: Vec<(f64, f64)> = eps_list.0.iter().copied().zip(eta.iter().copied()).collect();
            let opts = RegularizedOptions { step: *step, ..RegularizedOptions::default() };
            let rows = pairs
                .par_iter()
                .map(|&(e, h)| probe_distance(&m.field, *transition, e, h, *x0, *tmax, &opts))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let mut csv = String::from("eps,eta,distance\n");
            for r in &rows {
                csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", r.eps, r.eta, r.distance));
            }
            match path {
                Some(p) => write_file(p, |w| w.write_all(csv.as_bytes()))?,
                None => emit(out, &csv)?,
            }
            Ok(Status::Done)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let name = path.display().to_string();
    let file = File::create(path).map_err(|e| CliError::io(&name, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&name, e))
}

fn load(args: &ModelArgs) -> Result<Model> {
    let overrides: BTreeMap<String, f64> = args.params.iter().cloned().collect();
    Ok(load_model(&args.model, &overrides)?)
}

fn header(path: &Path, m: &Model) -> Report {
    let mut r = Report::new();
    r.push("model", path.display());
    if !m.params.is_empty() {
        let p: Vec<String> = m.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        r.push("params", p.join(", "));
    }
    r
}

fn status_of(tag: VerdictTag) -> Status {
    match tag {
        VerdictTag::Undetermined => Status::Undetermined,
        _ => Status::Done,
    }
}

fn simulation_status(traj: &Trajectory) -> Status {
    match traj.stop_reason() {
        Some(StopReason::NoSliding(_)) | Some(StopReason::DriftUndefined) => Status::Undetermined,
        _ => Status::Done,
    }
}

fn classify(
    pw: &PiecewiseField,
    p: &[f64; 3],
    tol: f64,
    verdict: &VerdictArgs,
) -> Result<(Report, Status)> {
    let stratum = stratum_of(p, tol);
    let mut r = Report::new();
    r.push("point", triple(p));
    r.push("stratum", stratum);
    r.push("codimension", stratum.codimension());
    match stratum.codimension() {
        0 => {
            let q = stratum.quadrant().expect("codimension 0 is a quadrant");
            r.push("field", triple(&pw.eval(q, p)?));
            Ok((r, Status::Done))
        }
        1 => {
            let class = classify_codim1(pw, p, tol)?;
            let normal = if stratum.s1 == 0 { "x1" } else { "x2" };
            r.push("normal", normal);
            r.push("normal_plus", num(class.lie_plus));
            r.push("normal_minus", num(class.lie_minus));
            let kind = match class.tag {
                Codim1Tag::Sliding if class.lie_plus < 0.0 => "SLIDING (attracting)",
                Codim1Tag::Sliding => "SLIDING (repelling)",
                Codim1Tag::Sewing => "SEWING",
                Codim1Tag::Tangency => "TANGENCY",
            };
            r.push("class", kind);
            if class.tag == Codim1Tag::Sliding {
                let s = sliding_field_codim1(pw, p, tol)?;
                r.push("rho", num(s.rho));
                r.push("sliding_field", triple(&s.field_value));
            }
            Ok((r, Status::Done))
        }
        _ => {
            let args = VerdictArgs { x3: p[2], ..verdict.clone() };
            let (v, tag) = verdict_report(pw, &args)?;
            r.push("class", "codimension two; pairwise convention does not apply");
            r.append(v);
            r.push("status", if tag == VerdictTag::Undetermined { "undetermined" } else { "decided" });
            Ok((r, status_of(tag)))
        }
    }
}

fn certificate_name(e: &EquilibriumReport, stability: Stability) -> String {
    let shape = match e.kind {
        EquilibriumType::StableFocus | EquilibriumType::UnstableFocus => "focus",
        EquilibriumType::Saddle => return "saddle".into(),
        EquilibriumType::StableNode | EquilibriumType::UnstableNode => "node",
        _ => "degenerate equilibrium",
    };
    format!("{stability} {shape}")
}

fn k_label(k: f64) -> String {
    if k.is_finite() { num(k) } else { "inf".into() }
}

/// Runs the applicable sufficient condition and writes the verdict with the
/// conventions it depends on.
pub fn verdict_report(pw: &PiecewiseField, args: &VerdictArgs) -> Result<(Report, VerdictTag)> {
    let implied_k = match args.regime {
        Regime::Fixed(k) => 1.0 / k,
        Regime::ToZero => f64::INFINITY,
        Regime::ToInfinity => 0.0,
    };
    let k = args.k.unwrap_or(implied_k);
    if !(k > 0.0 && k.is_finite()) && args.k.is_some() {
        return Err(CliError::Usage(format!("--K must be positive and finite, got {k}")));
    }
    let mut r = Report::new();
    r.push("x3", num(args.x3));
    r.push("regime", args.regime);

    let mut attempts: Vec<SlidingVerdict> = Vec::new();
    if pw.is_constant() {
        attempts.push(sliding_verdict(pw, args.regime)?);
    } else {
        if k.is_finite() && k > 0.0 {
            let slow = SlowSystem::new(pw)
                .with_k(k)
                .with_mode(args.mode)
                .with_transition(args.transition);
            attempts.push(indicator_verdict(&slow, args.x3)?);
        }
        if attempts.last().is_none_or(|v| v.tag != VerdictTag::Sliding) {
            attempts.push(approximate_verdict(pw, args.x3, args.regime)?);
        }
    }
    let v = attempts.last().expect("at least one criterion ran").clone();

    r.push("criterion", v.criterion.name());
    r.push(
        "convention",
        format!(
            "scaling={}, mode={}, K={}, transition={}",
            Scaling::default(),
            if pw.is_constant() { "n/a (constant fields)".to_string() } else { args.mode.to_string() },
            k_label(k),
            args.transition.name()
        ),
    );
    if attempts.len() > 1 {
        let first = &attempts[0];
        r.push("first_criterion", format!("{} -> {}", first.criterion.name(), first.tag));
    }
    r.push("verdict", v.tag);
    for (i, e) in v.equilibria.iter().enumerate() {
        r.push(
            format!("equilibrium[{i}]"),
            format!(
                "{} type={} stability={} trace={} det={} inside={}",
                pair(e.report.location),
                e.report.kind,
                e.stability,
                num(e.report.trace),
                num(e.report.det),
                e.report.in_unit_square
            ),
        );
    }
    let cert = v
        .equilibria
        .iter()
        .find(|e| matches!(e.stability, Stability::Attracting | Stability::Repelling));
    if let Some(e) = cert.filter(|_| v.tag == VerdictTag::Sliding) {
        r.push("certificate", format!("{} at {}", certificate_name(&e.report, e.stability), pair(e.report.location)));
    }
    let indicator = attempts.iter().flat_map(|a| a.indicator.iter());
    for (i, e) in indicator.enumerate() {
        r.push(
            format!("D[{i}]"),
            format!(
                "{} at {} trace={} det={}{}",
                num(e.d),
                pair(e.point),
                num(e.trace),
                num(e.det),
                if e.is_certificate() { " certificate" } else { "" }
            ),
        );
    }
    if v.tag == VerdictTag::Sliding && v.criterion.name().starts_with("indicator") {
        if let Some(e) = v.indicator.iter().find(|e| e.is_certificate()) {
            r.push("certificate", format!("D = {} != 0 at {}", num(e.d), pair(e.point)));
        }
    }
    if let Some(note) = &v.note {
        r.push("note", note);
    }
    Ok((r, v.tag))
}

fn frozen(pw: &PiecewiseField, x3: f64) -> Result<(PiecewiseField, bool)> {
    if pw.is_constant() {
        Ok((pw.clone(), false))
    } else {
        Ok((pw.frozen_at(&[0.0, 0.0, x3])?, true))
    }
}

fn reduce(pw: &PiecewiseField, regime: Regime, x3: f64) -> Result<Report> {
    let (pw, was_frozen) = frozen(pw, x3)?;
    let b = reduced_bilinear_system(&pw, regime)?;
    let mut r = Report::new();
    if was_frozen {
        r.push("frozen_at", triple(&[0.0, 0.0, x3]));
    }
    r.push("regime", regime);
    r.push("scaling", Scaling::default());
    let row = |c: &slidecross::bilinear::Bilinear| {
        format!("{} + {}*x + {}*y + {}*x*y", num(c.c00), num(c.c10), num(c.c01), num(c.c11))
    };
    r.push("eqx", row(&b.eqx));
    r.push("eqy", format!("ratio * ({})", row(&b.eqy)));
    match FactoredForm::new(&b) {
        Ok(f) => {
            r.push(
                "factored_x",
                format!("lambda1={} alpha1={} beta1={} delta1={}", num(f.lambda1), num(f.alpha1), num(f.beta1), num(f.delta1)),
            );
            r.push(
                "factored_y",
                format!("lambda2={} alpha2={} beta2={} delta2={}", num(f.lambda2), num(f.alpha2), num(f.beta2), num(f.delta2)),
            );
            let c = CenteredForm::new(&f);
            r.push(
                "centered",
                format!(
                    "delta1={} C={} alpha2={} beta2={} delta2={} shift={} time_scale={}",
                    num(c.delta1),
                    num(c.c),
                    num(c.alpha2),
                    num(c.beta2),
                    num(c.delta2),
                    pair(c.shift),
                    num(c.time_scale)
                ),
            );
        }
        Err(e) => {
            r.push("factored", format!("unavailable: {e}"));
        }
    }
    equilibria_lines(&mut r, &b, regime);
    Ok(r)
}

fn equilibria_lines(r: &mut Report, b: &BilinearXY, regime: Regime) {
    let ratio = regime.probe_ratios()[0];
    match b.equilibria() {
        slidecross::bilinear::Roots::Continuum => {
            r.push("equilibria", "continuum");
        }
        slidecross::bilinear::Roots::Points(pts) => {
            r.push("equilibria", pts.len());
            for (i, &p) in pts.iter().enumerate() {
                let e = EquilibriumReport::new(p, b.jacobian(p.0, p.1, ratio));
                r.push(
                    format!("equilibrium[{i}]"),
                    format!("{} type={} inside={}", pair(p), e.kind, e.in_unit_square),
                );
            }
        }
    }
}

/// ` + v` or ` - |v|`, omitted for zero.
fn plus(v: f64) -> String {
    if v == 0.0 {
        String::new()
    } else if v > 0.0 {
        format!(" + {v}")
    } else {
        format!(" - {}", -v)
    }
}

fn system_from_list(v: &[f64]) -> Result<QuadSystem> {
    match *v {
        [aa, bb, cc, dd, a, b, c, d] => Ok(QuadSystem::new(aa, bb, cc, dd, a, b, c, d)?),
        _ => Err(CliError::Usage(format!("--system needs 8 values A,B,C,D,a,b,c,d, got {}", v.len()))),
    }
}

fn quad_from_field(pw: &PiecewiseField, x3: f64) -> Result<QuadSystem> {
    let (pw, _) = frozen(pw, x3)?;
    let f = FactoredForm::new(&reduced_bilinear_system(&pw, Regime::Fixed(1.0))?)?;
    Ok(QuadSystem::new(f.lambda1, f.delta1, f.lambda2, f.delta2, f.alpha1, f.beta1, f.alpha2, f.beta2)?)
}

fn normal_form(q: &QuadSystem) -> Result<Report> {
    let n = affine_normalize(q)?;
    let mut r = Report::new();
    r.push("system", q);
    r.push("case", n.case);
    r.push("normalized", n.normalized);
    let (b, c, d) = n.parameters();
    r.push("parameters", format!("B={} C={} D={}", num(b), num(c), num(d)));
    r.push(
        "map",
        format!("x = {}*X{}, y = {}*Y{}, tau = {}*t", num(n.u), plus(n.v), num(n.w), plus(n.r), num(n.k)),
    );
    if matches!(n.case, CaseTag::IV | CaseTag::V) {
        r.push("constant_sign", num(n.constant_sign));
    }
    r.push("residual", format!("{:e}", n.residual(q)));
    match n.case {
        CaseTag::I => {
            let p = c / (1.0 + c);
            let (b1, d1) = (b - p * p, d - c / ((1.0 + c) * (1.0 + c)));
            r.push("bt_unfolding", format!("B1={} D1={}", num(b1), num(d1)));
            match bt_normal_form(c, b1, d1) {
                Ok(bt) => {
                    r.push(
                        "bt_normal_form",
                        format!(
                            "X' = Y, Y' = {} + {}*Y + {}*X^2 + {}*X*Y + {}*Y^2",
                            num(bt.b00),
                            num(bt.b01),
                            num(bt.b20),
                            num(bt.b11),
                            num(bt.b02)
                        ),
                    );
                    r.push("bt_regularity_det", num(bt_regularity_determinant(c)?));
                }
                Err(e) => {
                    r.push("bt_normal_form", format!("unavailable: {e}"));
                }
            }
        }
        CaseTag::II | CaseTag::III => {
            let center = center_check(n.case, b, d)?;
            r.push("linear_center", if center { "yes (weak focus possible)" } else { "no" });
        }
        _ => {}
    }
    Ok(r)
}

fn regions(grid: &Grid) -> Result<String> {
    let labels = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (a, b) = grid.point(i);
            bifurcation_region(a, b).map(|r| (a, b, r))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut csv = String::from("alpha,beta,region\n");
    for (a, b, r) in labels {
        csv.push_str(&format!("{:.16e},{:.16e},{r}\n", a, b));
    }
    Ok(csv)
}
