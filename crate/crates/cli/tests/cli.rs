use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsep")).args(args).output().expect("run qsep")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn volume_prints_exact_expression() {
    let v = json_stdout(&qsep(&["volume", "--n", "4", "--beta", "4"]));
    assert_eq!(v["result"]["expression"], "π^12/315071454005160652800000");
    let x: f64 = v["result"]["value"].as_str().unwrap().parse().unwrap();
    assert!((x - 2.933_522_443_160_575e-18).abs() < 1e-30);
    assert_eq!(v["config"]["n"], 4);
}

#[test]
fn r2_reports_the_rational_value() {
    let v = json_stdout(&qsep(&["r2", "--system", "two-qubit", "--beta", "2"]));
    let r = &v["result"];
    assert_eq!(r["conjecture"]["expression"], "71/99");
    assert!((r["value"].as_f64().unwrap() - 71.0 / 99.0).abs() < 1e-9);
    assert!(r["std_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn validation_errors_exit_with_code_two() {
    let out = qsep(&["scan", "two-qubit", "--beta", "1", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
    assert_eq!(qsep(&["volume", "--n", "4", "--beta", "5"]).status.code(), Some(2));
    assert_eq!(qsep(&["volume", "--n", "4", "--beta", "2", "--bogus"]).status.code(), Some(2));
    assert_eq!(qsep(&["scenario", "bures-23-trunc"]).status.code(), Some(2));
    assert_eq!(qsep(&["fit", "--table", "/nonexistent.csv", "--family", "qq-one-param"]).status.code(), Some(2));
}

#[test]
fn scan_outputs_do_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for w in ["1", "4", "16"] {
        let out = dir.path().join(format!("w{w}"));
        let args = ["scan", "two-qubit", "--beta", "4", "--samples", "20000", "--points", "21", "--block", "1000"];
        let o = qsep(&[&args[..], &["--workers", w, "--out", out.to_str().unwrap()]].concat());
        let summary = json_stdout(&o);
        assert_eq!(summary["config"]["workers"].as_u64().unwrap().to_string(), w);
        assert!(out.join("scan-two-qubit.meta.json").exists());
        bodies.push(read(&out.join("scan-two-qubit.csv")));
    }
    assert!(bodies.windows(2).all(|b| b[0] == b[1]));
    assert_eq!(String::from_utf8_lossy(&bodies[0]).lines().count(), 22);
}

#[test]
fn resumed_scan_matches_a_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("cp.json");
    let base = ["scan", "qubit-qutrit", "--beta", "1", "--points", "5", "--checkpoint-interval", "50000"];
    let full = qsep(&[&base[..], &["--samples", "200000"]].concat());
    assert!(full.status.success());
    let cp_s = cp.to_str().unwrap();
    let first = qsep(&[&base[..], &["--samples", "100000", "--checkpoint", cp_s]].concat());
    assert!(first.status.success());
    let resumed = qsep(&[&base[..], &["--samples", "200000", "--resume", cp_s, "--workers", "3"]].concat());
    assert!(resumed.status.success(), "{}", String::from_utf8_lossy(&resumed.stderr));
    assert_eq!(full.stdout, resumed.stdout);

    let other = ["scan", "qubit-qutrit", "--beta", "2", "--points", "5", "--samples", "200000", "--resume", cp_s];
    let mismatch = qsep(&other);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("fingerprint"));
}

#[test]
fn fit_reads_saved_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let scan = qsep(&["scan", "qubit-qutrit", "--beta", "1", "--samples", "100000", "--points", "11", "--out", out]);
    assert!(scan.status.success());
    let table = dir.path().join("scan-qubit-qutrit.csv");
    let fit = json_stdout(&qsep(&["fit", "--table", table.to_str().unwrap(), "--family", "qq-one-param"]));
    let gamma = fit["result"]["params"][0].as_f64().unwrap();
    assert!((2.0..3.2).contains(&gamma), "{gamma}");
    assert_eq!(fit["result"]["grid_size"].as_u64(), Some(121));
}

#[test]
fn eigen_table_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let scan = qsep(&["eigen", "scan", "--m", "6", "--unitaries", "2000", "--out", out]);
    assert!(scan.status.success());
    let table = dir.path().join("eigen-scan.csv");
    let p = json_stdout(&qsep(&["eigen", "probability", "--table", table.to_str().unwrap()]));
    let v = p["result"]["value"].as_f64().unwrap();
    assert!(v > 0.15 && v < 0.35, "{v}");
    let fit = json_stdout(&qsep(&["fit", "--table", table.to_str().unwrap(), "--family", "vad-power"]));
    assert!(fit["result"]["params"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn eigen_bounds_and_models() {
    let b = json_stdout(&qsep(&["eigen", "bounds"]));
    let ball = b["result"]["ball"].as_f64().unwrap();
    assert!((ball - 35.0 * std::f64::consts::PI / (23328.0 * 3f64.sqrt())).abs() < 1e-9);
    let m = json_stdout(&qsep(&["eigen", "model", "--model", "one"]));
    assert!((m["result"]["probability"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn scenario_and_registry() {
    let s = json_stdout(&qsep(&["scenario", "hs-23-complex"]));
    assert!((s["result"]["probability"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-8);
    let all = json_stdout(&qsep(&["scenario", "--all"]));
    assert_eq!(all["result"].as_array().unwrap().len(), 12);
    let e = json_stdout(&qsep(&["registry", "get", "prob-two-qubit-beta2"]));
    assert_eq!(e["expression"], "8/33");
    let list = json_stdout(&qsep(&["registry", "list"]));
    assert!(list.as_array().unwrap().len() > 20);
}
