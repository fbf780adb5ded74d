use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use slidecross::quadratic::normal_form::bt_family_normal_form;
use slidecross::quadratic::regions::bifurcation_region;

fn model(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../models/{name}.model"));
    p.to_string_lossy().into_owned()
}

fn slidecross(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slidecross"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
}

#[test]
fn verdict_to_zero_certifies_a_repelling_node() {
    let o = slidecross(&["verdict", &model("regime_switch"), "--regime", "to-zero"]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout(&o);
    assert_eq!(value(&r, "verdict"), Some("SLIDING"));
    assert!(value(&r, "certificate").unwrap().starts_with("repelling node"), "{r}");
    assert_eq!(value(&r, "regime"), Some("to_zero"));
}

#[test]
fn verdict_fixed_and_to_infinity_are_attracting() {
    for regime in ["k=1", "to-inf"] {
        let r = stdout(&slidecross(&["verdict", &model("regime_switch"), "--regime", regime]));
        assert!(value(&r, "certificate").unwrap().starts_with("attracting"), "{regime}: {r}");
    }
}

#[test]
fn verdict_report_names_criterion_and_convention_in_a_stable_order() {
    let r = stdout(&slidecross(&["verdict", &model("polynomial"), "--mode", "local", "--K", "1"]));
    let keys: Vec<&str> = r.lines().filter_map(|l| l.split_once(": ").map(|(k, _)| k)).collect();
    assert_eq!(&keys[..6], ["model", "x3", "regime", "criterion", "convention", "verdict"]);
    assert_eq!(value(&r, "criterion"), Some("indicator trace*det at slow equilibria"));
    let conv = value(&r, "convention").unwrap();
    assert!(conv.contains("scaling=") && conv.contains("mode=local") && conv.contains("K=1"), "{conv}");
    let d: f64 = value(&r, "D[0]").unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((d + 84.0).abs() < 84.0 * 1e-9, "{d}");
}

#[test]
fn degenerate_verdict_exits_with_two() {
    let o = slidecross(&["verdict", &model("bt_unfolding")]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(value(&stdout(&o), "verdict"), Some("UNDETERMINED"));
}

#[test]
fn simulate_writes_the_golden_events() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let events = dir.path().join("events.csv");
    let o = slidecross(&[
        "simulate", &model("cross_slide"), "--x0", "0.5,0.5,0", "--tmax", "13", "--step", "1e-3",
        "--out", traj.to_str().unwrap(), "--events", events.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ev = fs::read_to_string(&events).unwrap();
    let rows: Vec<&str> = ev.lines().collect();
    assert_eq!(rows[0], "t,kind,x1,x2,x3");
    assert!(rows[1].starts_with("7.62711864") && rows[1].contains(",CROSS,"), "{}", rows[1]);
    assert!(rows[2].contains(",SLIDE_ENTER,") && rows[3].contains(",PIN_SIGMA00,"));
    let t = fs::read_to_string(&traj).unwrap();
    assert!(t.starts_with("t,x1,x2,x3,mode\n0.0000000000000000e0,5.0000000000000000e-1"));
    assert!(t.lines().last().unwrap().ends_with("PINNED(00)"));
}

#[test]
fn simulate_prints_events_when_no_file_is_given() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let o = slidecross(&[
        "simulate", &model("constant_sliding"), "--x0", "0.5,-0.25,0", "--tmax", "1",
        "--out", traj.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("t,kind,x1,x2,x3\n"));
    assert!(stdout(&o).contains("PIN_SIGMA00"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let traj = dir.path().join(format!("traj{tag}.csv"));
        let events = dir.path().join(format!("events{tag}.csv"));
        let regions = dir.path().join(format!("regions{tag}.csv"));
        let probe = dir.path().join(format!("probe{tag}.csv"));
        slidecross(&[
            "simulate", &model("cross_slide"), "--x0", "0.5,0.5,0", "--tmax", "13",
            "--out", traj.to_str().unwrap(), "--events", events.to_str().unwrap(),
        ]);
        slidecross(&["regions", "--grid", "-0.1:0.1:5,-0.1:0.1:4", "--out", regions.to_str().unwrap()]);
        slidecross(&[
            "probe", &model("constant_sliding"), "--eps-list", "0.1,0.05", "--x0", "1,1,0", "--tmax", "2",
            "--out", probe.to_str().unwrap(),
        ]);
        [traj, events, regions, probe].map(|p| fs::read(p).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    for (x, y) in a.iter().zip(&b) {
        assert!(!x.is_empty());
        assert_eq!(x, y);
    }
}

#[test]
fn regions_rows_follow_the_grid_and_the_library() {
    let o = slidecross(&["regions", "--grid", "-0.06:-0.06:1,0.04:0.04:1"]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout(&o);
    let row = r.lines().nth(1).unwrap();
    let expected = bifurcation_region(-0.06, 0.04).unwrap();
    assert!(row.ends_with(&format!(",{expected}")), "{row}");

    let r = stdout(&slidecross(&["regions", "--grid", "-0.2:0.2:3,0.1:0.3:2"]));
    let rows: Vec<&str> = r.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[1].starts_with("-2.0000000000000001e-1,2.9999999999999999e-1,"));
    assert_eq!(rows[2], "0.0000000000000000e0,1.0000000000000001e-1,I");
    assert!(rows[3].ends_with(",I") || rows[3].ends_with(",S"));
}

#[test]
fn normal_form_reports_the_bt_unfolding() {
    let o = slidecross(&["normal-form", &model("bt_unfolding"), "--param", "alpha=-0.06", "--param", "beta=0.04"]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout(&o);
    assert_eq!(value(&r, "case"), Some("I"));
    let nf = value(&r, "bt_normal_form").unwrap();
    let coef: Vec<f64> = nf
        .trim_start_matches("X' = Y, Y' = ")
        .split(" + ")
        .map(|t| t.split('*').next().unwrap().parse().unwrap())
        .collect();
    let (mu, nu) = bt_family_normal_form(-0.06, 0.04);
    assert!((coef[0] - mu).abs() < 1e-12 && (coef[1] - nu).abs() < 1e-12, "{nf}");
}

#[test]
fn normal_form_of_an_explicit_center_candidate() {
    let r = stdout(&slidecross(&["normal-form", "--system", "1,-2,1,-1,0,0,1,0"]));
    assert_eq!(value(&r, "case"), Some("II"));
    assert!(value(&r, "linear_center").unwrap().starts_with("yes"));
}

#[test]
fn reduce_lists_the_factored_form() {
    let r = stdout(&slidecross(&["reduce", &model("regime_switch")]));
    assert_eq!(value(&r, "eqx"), Some("-0.42444444444444446 + 0*x + 0*y + 1*x*y"));
    assert!(value(&r, "centered").unwrap().contains("C=2"));
    assert_eq!(value(&r, "equilibria"), Some("2"));
}

#[test]
fn classify_each_codimension() {
    let r = stdout(&slidecross(&["classify", &model("cross_slide"), "--point", "0.5,0.5,0"]));
    assert_eq!(value(&r, "stratum"), Some("Σ++"));
    let r = stdout(&slidecross(&["classify", &model("cross_slide"), "--point", "0,-0.2,1"]));
    assert_eq!(value(&r, "class"), Some("SLIDING (attracting)"));
    assert_eq!(value(&r, "sliding_field").map(|s| s.contains("1.3188888888888888")), Some(true));
    let r = stdout(&slidecross(&["classify", &model("cross_slide"), "--point", "0.3,0,0"]));
    assert_eq!(value(&r, "class"), Some("SEWING"));
    let r = stdout(&slidecross(&["classify", &model("constant_sliding"), "--point", "0,0,0"]));
    assert_eq!(value(&r, "verdict"), Some("SLIDING"));
}

#[test]
fn probe_distances_shrink_with_eps() {
    let r = stdout(&slidecross(&["probe", &model("constant_sliding"), "--eps-list", "0.1,0.05,0.01", "--x0", "1,1,0"]));
    let d: Vec<f64> = r
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(d.len(), 3);
    assert!(d[0] > d[1] && d[1] > d[2] && d[0] <= 0.1);
}

#[test]
fn errors_exit_with_one() {
    let cases: [&[&str]; 6] = [
        &["verdict", "--bogus"],
        &["regions", "--grid", "0:1"],
        &["regions", "--grid", "0:1:0,0:1:1"],
        &["verdict", "/nonexistent.model"],
        &["probe", "x.model", "--eps-list", "0.1,abc", "--x0", "0,0,0"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = slidecross(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn missing_quadrant_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.model");
    fs::write(&path, "field ++ : 1, 1, 1\nfield +- : 1, 1, 1\nfield -+ : 1, 1, 1\n").unwrap();
    let o = slidecross(&["verdict", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--"));
}

#[test]
fn help_exits_cleanly() {
    let o = slidecross(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for cmd in ["classify", "reduce", "verdict", "normal-form", "regions", "simulate", "probe"] {
        assert!(stdout(&o).contains(cmd), "{cmd}");
    }
}
