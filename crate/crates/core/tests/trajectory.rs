use std::path::PathBuf;

use slidecross::codim2::codim2_drift;
use slidecross::field::{stratum_of, Stratum};
use slidecross::integrator::{
    integrate_piecewise, integrate_regularized, EventKind, Mode, Options, RegularizedOptions,
};
use slidecross::model::load_model;
use slidecross::{PiecewiseField, Regime, Transition};

fn model(name: &str) -> PiecewiseField {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../models/{name}.model"));
    load_model(&p, &Default::default()).unwrap().field
}

#[test]
fn event_times_increase_and_states_respect_their_mode() {
    let pw = model("cross_slide");
    let traj = integrate_piecewise(&pw, [0.5, 0.5, 0.0], 14.0, &Options::default()).unwrap();
    assert!(traj.events.windows(2).all(|w| w[0].t < w[1].t));
    assert!(traj.states.windows(2).all(|w| w[0].t <= w[1].t));
    for s in &traj.states {
        match s.mode {
            Mode::Flow(q) => {
                let st = stratum_of(&s.x, 0.0);
                assert!(st == Stratum::from(q) || st.codimension() > 0, "{s:?}");
            }
            Mode::Slide(surface) => {
                assert_eq!(s.x[surface.normal], 0.0);
                assert_eq!(stratum_of(&s.x, 0.0), surface.stratum());
            }
            Mode::Pinned => assert_eq!((s.x[0], s.x[1]), (0.0, 0.0)),
            Mode::Regularized => unreachable!(),
        }
    }
}

#[test]
fn cross_happens_only_at_sewing_points() {
    let pw = model("cross_slide");
    let traj = integrate_piecewise(&pw, [0.5, 0.5, 0.0], 13.0, &Options::default()).unwrap();
    for e in traj.events.iter().filter(|e| e.kind == EventKind::Cross) {
        let c = slidecross::filippov::classify_codim1(&pw, &e.x, 1e-9).unwrap();
        assert_eq!(c.tag, slidecross::filippov::Codim1Tag::Sewing);
    }
}

#[test]
fn pinned_drift_matches_the_reduced_weights() {
    let pw = model("cross_slide");
    let traj = integrate_piecewise(&pw, [0.5, 0.5, 0.0], 14.0, &Options::default()).unwrap();
    let pinned: Vec<_> = traj.states.iter().filter(|s| s.mode == Mode::Pinned).collect();
    assert!(pinned.len() > 100);
    let drift = codim2_drift(&pw, 0.0, Regime::default()).unwrap();
    assert!((drift - 1.0).abs() < 1e-12);
    let (a, b) = (pinned[0], pinned[pinned.len() - 1]);
    assert!(((b.x[2] - a.x[2]) / (b.t - a.t) - drift).abs() < 1e-9);
}

#[test]
fn weighted_drift_example() {
    let mut v = [[0.0; 3]; 4];
    for (i, s) in slidecross::SignPair::ALL.iter().enumerate() {
        v[i] = [-s.f1(), -s.f2(), if i == 0 { 2.0 } else { 1.0 }];
    }
    let d = codim2_drift(&PiecewiseField::from_constants(v), 0.0, Regime::default()).unwrap();
    assert!((d - 1.25).abs() < 1e-15);
}

#[test]
fn regularized_and_filippov_agree_away_from_the_bands() {
    let pw = model("cross_slide");
    let x0 = [0.5, 0.5, 0.0];
    let filippov = integrate_piecewise(&pw, x0, 5.0, &Options::default()).unwrap();
    let reg = integrate_regularized(
        &pw,
        Transition::ClampedIdentity,
        0.01,
        0.01,
        x0,
        5.0,
        &RegularizedOptions::default(),
    )
    .unwrap();
    let (a, b) = (filippov.last().x, reg.last().x);
    for i in 0..3 {
        assert!((a[i] - b[i]).abs() < 1e-10, "{a:?} vs {b:?}");
    }
}

#[test]
fn regularized_runs_settle_inside_the_band() {
    let pw = model("constant_sliding");
    for eps in [0.1, 0.01] {
        let opts = RegularizedOptions::default();
        let t = integrate_regularized(&pw, Transition::ClampedCubic, eps, eps, [1.0, 1.0, 0.0], 5.0, &opts)
            .unwrap();
        let x = t.last().x;
        assert!(x[0].abs() < eps && x[1].abs() < eps, "{x:?}");
        assert!((x[2] - 5.0).abs() < 1e-9);
    }
}
