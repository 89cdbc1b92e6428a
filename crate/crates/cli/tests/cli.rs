use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn trunclap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trunclap"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn pk_eval_prints_the_truncated_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = trunclap(dir.path(), &["pk-eval", "--matrix", "[[1,0,0],[0,2,0],[0,0,3]]", "--k", "2"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3");
}

#[test]
fn out_writes_a_manifest_with_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let out = trunclap(dir.path(), &["constants", "--k", "2", "--hR", "1", "--out", "c.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read(dir.path().join("c.json")).unwrap();
    let constants: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(constants["hstar"], 1.0);

    let manifest: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("c.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "constants");
    assert_eq!(manifest["params"]["k"], 2);
    let listed = &manifest["outputs"][0];
    assert_eq!(listed["file"], "c.json");
    let digest = trunclap_cli::output::sha256_hex(&body);
    assert_eq!(listed["sha256"], digest.as_str());
}

#[test]
fn spec_runs_match_flag_runs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("spec.json"),
        r#"{"command": "constants", "params": {"k": 3, "hR": 0.5, "R": 2.0}}"#,
    )
    .unwrap();
    let from_spec = trunclap(dir.path(), &["run", "--spec", "spec.json"]);
    let from_flags = trunclap(dir.path(), &["constants", "--k", "3", "--hR", "0.5", "--R", "2"]);
    assert!(from_spec.status.success(), "{}", String::from_utf8_lossy(&from_spec.stderr));
    assert_eq!(stdout_json(&from_spec), stdout_json(&from_flags));
}

#[test]
fn unknown_spec_fields_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (name, spec) in [
        ("top.json", r#"{"command": "constants", "parms": {}}"#),
        ("inner.json", r#"{"command": "constants", "params": {"kk": 2}}"#),
    ] {
        std::fs::write(dir.path().join(name), spec).unwrap();
        let out = trunclap(dir.path(), &["run", "--spec", name]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let diag: Value = serde_json::from_slice(&out.stderr).expect("diagnostic JSON on stderr");
        assert_eq!(diag["error"], "usage");
    }
}

#[test]
fn invalid_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = trunclap(dir.path(), &["pk-eval", "--matrix", "[[1,2],[2,1]]", "--k", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["error"], "invalid_input");
}

#[test]
fn failed_checks_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // the annulus trend is expected to rise on the Dirichlet grid
    let out = trunclap(dir.path(), &["annulus", "--eps", "0.3,0.25", "--divisions", "3"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["passed"], false);
}

#[test]
fn eigenfunction_csv_round_trips_through_the_domain() {
    let dir = tempfile::tempdir().unwrap();
    let domain = r#"{"dim":2,"spacing":0.125,"shape":"ball","params":{"radius":1.0}}"#;
    let out = trunclap(dir.path(), &["eig", "--domain", domain, "--k", "1", "--eigenfunction", "phi.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let csv = std::fs::read_to_string(dir.path().join("phi.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.is_empty()).count();
    assert!(rows >= report["nodes"].as_u64().unwrap() as usize);
    assert!(report["inverse_power"]["mu"].as_f64().unwrap() > 0.0);
}
