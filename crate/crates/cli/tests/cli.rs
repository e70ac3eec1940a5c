//! End-to-end tests of the binary: exit codes, output shapes, and
//! reproducibility.

use std::process::{Command, Output};

fn freeharness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freeharness"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn density_semicircle_center_value() {
    let out = freeharness(&[
        "density", "--eta", "0", "--theta", "0", "--sigma", "0", "--tau", "0", "--t", "1",
        "--points", "101",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,density"));
    // middle grid point is x = 0 where the density is 1/π ≈ 0.31831
    let mid = text.lines().nth(51).unwrap();
    let value: f64 = mid.split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 1.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn invalid_params_exit_code_three() {
    let out = freeharness(&["density", "--sigma", "1", "--tau", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("sigma*tau must be < 1"), "stderr: {err}");
}

#[test]
fn usage_error_exit_code_two() {
    let out = freeharness(&["density", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_argv_and_seed_give_identical_bytes() {
    let args = [
        "sample", "--eta", "1", "--theta", "1", "--sigma", "0.5", "--tau", "0.5", "--t", "1",
        "--n", "200", "--seed", "9",
    ];
    let a = freeharness(&args);
    let b = freeharness(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let args = [
        "path", "--eta", "0", "--theta", "0", "--sigma", "0", "--tau", "0", "--times",
        "0.5,1,2", "--paths", "2", "--seed", "4",
    ];
    let a = freeharness(&args);
    let b = freeharness(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn path_rows_cover_every_time() {
    let out = freeharness(&[
        "path", "--eta", "3", "--theta", "-1", "--sigma", "0.5", "--tau", "0.5", "--times",
        "0.5,1,2", "--paths", "4", "--seed", "11",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 3);
    assert!(text.lines().nth(1).unwrap().starts_with("0,"));
}

#[test]
fn ck_check_reports_pass_json() {
    let out = freeharness(&[
        "ck-check", "--eta", "3", "--theta", "-1", "--sigma", "0.5", "--tau", "0.5", "--s",
        "0.5", "--t", "1", "--u", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["report"]["pass"], serde_json::json!(true));
    assert_eq!(doc["report"]["time_inverted"], serde_json::json!(true));
    assert!(doc["tool_version"].is_string());
}

#[test]
fn op_check_reports_three_identities() {
    let out = freeharness(&[
        "op-check", "--eta", "2.2", "--theta", "2.2", "--sigma", "1", "--tau", "0.2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["reports"].as_array().unwrap().len(), 3);
    assert_eq!(doc["pass"], serde_json::json!(true));
    assert_eq!(doc["reports"][0]["N"], serde_json::json!(40));
}

#[test]
fn check_suite_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("demo.json");
    std::fs::write(&params, r#"{"eta":1.0,"theta":1.0,"sigma":0.5,"tau":0.5}"#).unwrap();
    let report = dir.path().join("report.json");
    let out = freeharness(&[
        "check",
        "--params-file",
        params.to_str().unwrap(),
        "--suite",
        "linreg",
        "--order",
        "20",
        "--max-degree",
        "2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["pass"], serde_json::json!(true));
    assert!(!doc["reports"].as_array().unwrap().is_empty());
}

#[test]
fn density_writes_atoms_beside_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("density.csv");
    let out = freeharness(&[
        "density", "--eta", "2.2", "--theta", "2.2", "--sigma", "1", "--tau", "0.2", "--t",
        "0.3", "--points", "51", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let atoms = std::fs::read_to_string(dir.path().join("density_atoms.csv")).unwrap();
    assert!(atoms.lines().count() >= 2, "expected one atom row, got: {atoms}");
    let row = atoms.lines().nth(1).unwrap();
    let weight: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((weight - 0.8299029).abs() < 1e-6);
}

#[test]
fn moments_match_known_values() {
    let out = freeharness(&[
        "moments", "--eta", "0", "--theta", "0", "--sigma", "0", "--tau", "0", "--t", "1",
        "--max-degree", "6",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let catalan = [1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0];
    for (v, c) in vals.iter().zip(catalan) {
        assert!((v - c).abs() < 1e-12);
    }
}
