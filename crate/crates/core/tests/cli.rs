use std::path::Path;
use std::process::{Command, Output};

use pendubot_agat::scenario::{self, CSV_HEADER};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pendubot-agat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bin(&args)
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn stabilization_run_succeeds_with_stable_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s3.csv");
    let o = run_to(&out, &["--scenario", "s3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = read_rows(&out);
    assert_eq!(header, CSV_HEADER);
    assert_eq!(rows.len(), 6001);
    assert!(rows.iter().flatten().all(|v| v.is_finite()));
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert_eq!(rows.last().unwrap()[0], 60.0);
    assert!(rows.last().unwrap()[5] > 0.99);
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run_to(out, &["--scenario", "s3", "--t-end", "5"]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn unknown_scenario_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_to(&dir.path().join("x.csv"), &["--scenario", "nosuch"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_to(&dir.path().join("missing/x.csv"), &["--scenario", "s3"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn diverging_run_exits_3_and_keeps_the_partial_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("coarse.csv");
    let o = run_to(&out, &["--scenario", "s3", "--dt", "0.2", "--stride", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let (header, rows) = read_rows(&out);
    assert_eq!(header, CSV_HEADER);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.last().unwrap()[0], 0.4);
    assert!(rows.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn s1_run_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s1.csv");
    let o = run_to(&out, &["--scenario", "s1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_rows(&out);
    assert!(rows.last().unwrap()[5] > 0.99);
}

#[test]
fn singular_coupling_exits_2() {
    // With the elbow folded so that cos(theta2) = -2/3, K2 vanishes at t = 0.
    let dir = tempfile::tempdir().unwrap();
    let mut s = scenario::find_scenario("s3").unwrap();
    s.initial = pendubot_agat::PendubotState::from_angles(0.0, (-2.0f64 / 3.0).acos(), 0.0, 0.0);
    let cfg = dir.path().join("singular.cfg");
    std::fs::write(&cfg, scenario::to_config(&s)).unwrap();
    let o = run_to(&dir.path().join("x.csv"), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_matches_builtin_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s3.cfg");
    let shown = bin(&["show", "s3"]);
    assert_eq!(shown.status.code(), Some(0));
    std::fs::write(&cfg, &shown.stdout).unwrap();

    let from_cfg = dir.path().join("cfg.csv");
    let builtin = dir.path().join("builtin.csv");
    let extra = ["--t-end", "3", "--kp", "4", "--fd", "-1.5,-2.5", "--p", "2,1"];
    let mut a = vec!["--config", cfg.to_str().unwrap()];
    a.extend(extra);
    let mut b = vec!["--scenario", "s3"];
    b.extend(extra);
    assert_eq!(run_to(&from_cfg, &a).status.code(), Some(0));
    assert_eq!(run_to(&builtin, &b).status.code(), Some(0));
    assert_eq!(std::fs::read(&from_cfg).unwrap(), std::fs::read(&builtin).unwrap());
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "name = bad\nplant.m1 = heavy\n").unwrap();
    let o = run_to(&dir.path().join("x.csv"), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn quick_check_suite_passes() {
    let o = bin(&["check", "--suite", "quick"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 6);
}

#[test]
fn unknown_suite_exits_1() {
    assert_eq!(bin(&["check", "--suite", "nosuch"]).status.code(), Some(1));
}
