use std::path::Path;
use std::process::{Command, Output};

fn fracflow(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracflow"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn fracflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn curvature_with_defaults_writes_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracflow(dir.path(), &["curvature"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = std::fs::read_to_string(dir.path().join("config.resolved")).unwrap();
    for line in ["dim = 1", "grid = 256", "alpha = 0.5", "beta = 0.6", "gamma = 0.9", "cells = 4", "# holder_exponents = conforming"] {
        assert!(resolved.contains(line), "missing `{line}` in\n{resolved}");
    }
    assert!(resolved.contains("# quadrature:"));
    let (h, rows) = csv(&dir.path().join("curvature.csv"));
    assert_eq!(h, ["x", "u", "h_nmc", "h_pv"]);
    assert_eq!(rows.len(), 256);
    for r in &rows {
        assert!((r[2] - r[3]).abs() < 1e-5);
    }
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test\nalpha = 0.3\ngrid = 64\nbeta = 0.2\n").unwrap();
    let out = dir.path().join("out");
    let o = fracflow(&out, &["--config", cfg.to_str().unwrap(), "--grid", "32", "curvature", "--form", "pv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = std::fs::read_to_string(out.join("config.resolved")).unwrap();
    assert!(resolved.contains("alpha = 0.3") && resolved.contains("grid = 32"));
    assert!(resolved.contains("nonconforming"));
    let (h, rows) = csv(&out.join("curvature.csv"));
    assert_eq!(h, ["x", "u", "h_pv"]);
    assert_eq!(rows.len(), 32);
}

#[test]
fn out_of_range_order_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracflow(dir.path(), &["--alpha", "1.2", "curvature"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("order out of range"));
}

#[test]
fn unknown_subcommand_and_help() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fracflow(dir.path(), &["bogus"])), 1);
    assert_eq!(code(&fracflow(dir.path(), &["--help"])), 0);
    assert_eq!(code(&fracflow(dir.path(), &["simulate", "--scheme", "euler"])), 1);
}

#[test]
fn symbol_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracflow(dir.path(), &["symbol", "--method", "both", "--slope", "0.7", "--kmax", "6", "--mikhlin"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv(&dir.path().join("symbol.csv"));
    assert_eq!(h, ["k", "m_direct", "m_polar", "P_a"]);
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert!((r[1] - r[2]).abs() <= 1e-5 * r[2].abs(), "{r:?}");
        assert!(r[2] < 0.0);
    }
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("mikhlin.json")).unwrap()).unwrap();
    assert!(m["m_emp"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_reports_limit_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracflow(dir.path(), &["--grid", "32", "simulate", "--u0", "c@0.25;2@0.01", "--t-end", "0.2", "--snapshot-every", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv(&dir.path().join("trace.csv"));
    assert_eq!(h, ["t", "sup_u", "sup_dx1", "sup_dt", "mean", "besov_1.5"]);
    assert_eq!(rows.len(), 201);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["termination"], "completed");
    assert!((s["c_limit"].as_f64().unwrap() - 0.25).abs() < 1e-8);
    // Snapshots at steps 0, 50, 100, 150, 200, readable as initial data.
    let snap = dir.path().join("snapshot_00004.txt");
    assert!(snap.is_file());
    let again = dir.path().join("again");
    let o = fracflow(&again, &["--grid", "32", "curvature", "--u0", snap.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn blow_up_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracflow(dir.path(), &["--grid", "32", "simulate", "--u0", "7@50", "--scheme", "explicit_rk2", "--dt", "0.5", "--t-end", "50"]);
    assert_eq!(code(&o), 2);
    let s = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(s.contains("blow-up"));
}

#[test]
fn verify_single_suite() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let o = fracflow(dir.path(), &["verify", "--suite", "homogeneity", "--json", json.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    let r = &v[0];
    assert_eq!(r["name"], "homogeneity");
    assert_eq!(r["status"], "pass");
    assert!(r["measured"].as_f64().unwrap() <= r["tolerance"].as_f64().unwrap());
    assert!(r["paper_anchor"].is_string());
    assert_eq!(code(&fracflow(dir.path(), &["verify", "--suite", "nope"])), 1);
}
