//! Runs the `heatflow` binary end to end.

use std::process::Command;

fn heatflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_heatflow")).args(args).output().expect("binary runs")
}

#[test]
fn evolve_writes_one_row_per_root() {
    let out = heatflow(&["evolve", "--profile", "weyl", "--n", "1000", "--t", "0.5", "--seed", "7", "--format", "csv"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("j,re,im"));
    assert_eq!(lines.count(), 1000);
}

#[test]
fn evolve_is_reproducible_and_thread_independent() {
    let a = heatflow(&["evolve", "--n", "120", "--seed", "3", "--threads", "1"]);
    let b = heatflow(&["evolve", "--n", "120", "--seed", "3", "--threads", "2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn evolve_files_and_svg() {
    let dir = std::env::temp_dir().join(format!("heatflow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("evenly.svg");
    let out = heatflow(&["evolve", "--profile", "evenly:r=1", "--n", "150", "--t", "1.0", "--format", "svg", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(&path).unwrap();
    assert_eq!(svg.matches("<circle").count(), 150);
    assert!(svg.contains("<polyline"));
    let csv = std::fs::read_to_string(path.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 151);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn limit_prints_critical_times() {
    let s = |p: &str| {
        let out = heatflow(&["limit", "--profile", p, "--grid", "5", "--out", "/dev/null"]);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let w = s("weyl");
    assert!(w.contains("t_sing=1\n") && w.contains("t_Wig=1\n"), "{}", w);
    let k = s("kac");
    assert!(k.contains("t_sing=undefined\n") && k.contains("t_Wig=2.718281828\n"), "{}", k);
    let a = s("annulus");
    assert!(a.contains("t_sing=1\n") && a.contains("t_Wig=7.389056099\n"), "{}", a);
}

#[test]
fn bad_config_exits_with_1() {
    assert_eq!(heatflow(&["evolve", "--profile", "nope"]).status.code(), Some(1));
    assert_eq!(heatflow(&["evolve", "--n", "0"]).status.code(), Some(1));
    assert_eq!(heatflow(&["evolve", "--t", "1+xi"]).status.code(), Some(1));
    assert_eq!(heatflow(&["track", "--n", "10"]).status.code(), Some(1));
    assert_eq!(heatflow(&["check", "--suite", "nope"]).status.code(), Some(1));
}

#[test]
fn track_degree_two_matches_closed_form() {
    let out = heatflow(&["track", "--profile", "iid:weyl", "--n", "2", "--t-grid", "0:0.4:0.1", "--seed", "1"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = s.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 10);
    // z^2 - e1 z + e2 flows to z^2 - e1 z + e2 - t/2: the sum is fixed and
    // the product drops by t/2
    let at = |i: usize| (rows[2 * i][2], rows[2 * i][3], rows[2 * i + 1][2], rows[2 * i + 1][3]);
    let (a0, b0, c0, d0) = at(0);
    let e2 = |(a, b, c, d): (f64, f64, f64, f64)| (a * c - b * d, a * d + b * c);
    for i in 1..5 {
        let (a, b, c, d) = at(i);
        assert!((a + c - a0 - c0).abs() < 1e-9 && (b + d - b0 - d0).abs() < 1e-9);
        let (pr, pi) = e2((a, b, c, d));
        let (qr, qi) = e2((a0, b0, c0, d0));
        let t = 0.1 * i as f64;
        assert!((pr - (qr - t / 2.0)).abs() < 1e-9 && (pi - qi).abs() < 1e-9, "{} {}", pr, qr);
    }
}

#[test]
fn check_suite_reports_and_exit_code() {
    let out = heatflow(&["check", "--suite", "closed-forms", "--out", "/dev/null"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s.lines().count(), 5);
    assert!(s.lines().all(|l| l.contains(": PASS")), "{}", s);
    assert_eq!(out.status.code(), Some(0));
}
