//! Black-box tests of the command-line interface: exit codes, determinism
//! of machine output, and config handling.

use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contention-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let args = [
        "run", "--protocol", "dynamic2", "--n", "8", "--d", "2", "--adversary", "front",
        "--seed", "7",
    ];
    let a = bench(&args);
    let b = bench(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
    let parsed: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(parsed["terminated"], serde_json::Value::Bool(true));
}

#[test]
fn seed_flag_changes_the_outcome() {
    let a = bench(&["run", "--protocol", "dynamic2", "--n", "8", "--seed", "1"]);
    let b = bench(&["run", "--protocol", "dynamic2", "--n", "8", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn verify_lemma_reports_zero_violations() {
    let out = bench(&["verify-lemma", "--samples", "2000"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "violations: 0");
}

#[test]
fn sweep_with_empty_grid_exits_one() {
    let out = bench(&["sweep", "--protocol", "dynamic2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_protocol_exits_one() {
    let out = bench(&["run", "--protocol", "nonesuch", "--n", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_with_unknown_key_is_rejected() {
    let dir = std::env::temp_dir();
    let path = dir.join("contention-bench-badcfg.json");
    std::fs::write(
        &path,
        r#"{"n": 4, "d": 0, "protocol": "dynamic2", "adversary": {}, "seed": 1, "bogus": true}"#,
    )
    .unwrap();
    let out = bench(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_then_fit_round_trips() {
    let dir = std::env::temp_dir();
    let csv = dir.join("contention-bench-sweep.csv");
    let out = bench(&[
        "sweep", "--protocol", "dynamic2", "--n", "8,16,32", "--trials", "3", "--seed", "5",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = bench(&["fit", "--csv", csv.to_str().unwrap(), "--model", "n_log_n_plus_d"]);
    assert!(fit.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    assert!(parsed["c_lsq"].as_f64().unwrap() > 0.0);
}

#[test]
fn decompose_emits_interval_json() {
    let out = bench(&[
        "decompose", "--protocol", "static2", "--n", "6", "--seed", "3", "--kind",
        "complete-static",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(parsed["decomposition"]["intervals"].as_array().is_some());
}
