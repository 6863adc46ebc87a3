//! End-to-end tests of the binary: value contracts, exit codes, output
//! formats, configuration precedence, and byte-level determinism.

use std::io::Write;
use std::process::{Command, Output};

fn qkraw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkraw"))
        .args(args)
        .env_remove("QKRAW_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn value_of(json: &serde_json::Value, name: &str) -> String {
    json["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["name"] == name)
        .unwrap_or_else(|| panic!("no value named {name}"))["value"]
        .as_str()
        .unwrap()
        .to_string()
}

#[test]
fn eval_quantum_degree_zero_is_one() {
    let out = qkraw(&[
        "eval", "--quantity", "qtm", "--q", "1/2", "--theta2", "1/4", "-N", "4", "-n", "0", "-x",
        "2", "--backend", "exact",
    ]);
    let json = stdout_json(&out);
    assert_eq!(value_of(&json, "qtm"), "1");
}

#[test]
fn eval_chi_matches_hand_value() {
    // N=1 block: chi_{0,1} = -theta = -1/2 at theta2 = 1/4
    let out = qkraw(&[
        "eval", "--quantity", "chi", "--q", "1/2", "--theta2", "1/4", "-N", "1", "-n", "0", "-x",
        "1", "--backend", "exact",
    ]);
    let json = stdout_json(&out);
    assert_eq!(value_of(&json, "chi"), "-1/2");
}

#[test]
fn eval_weight_hand_value() {
    // w_1^(1) = theta2 = 1/2
    let out = qkraw(&[
        "eval", "--quantity", "weight", "--q", "1/3", "--theta2", "1/2", "-N", "1", "-x", "1",
        "--backend", "exact",
    ]);
    let json = stdout_json(&out);
    assert_eq!(value_of(&json, "weight"), "1/2");
}

#[test]
fn table_has_all_entries_and_small_diffs() {
    let out = qkraw(&[
        "table", "--q", "0.5", "--theta2", "0.25", "-N", "2",
    ]);
    let json = stdout_json(&out);
    let rows = json["table"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    for row in rows {
        let diff: f64 = row["abs_diff"].as_str().unwrap().parse().unwrap();
        assert!(diff.abs() < 1e-80);
    }
}

#[test]
fn table_csv_has_contracted_header() {
    let out = qkraw(&[
        "table", "--q", "0.5", "--theta2", "0.25", "-N", "1", "--output", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,x,value_closed,value_operator,abs_diff"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn verify_single_suite_passes() {
    let out = qkraw(&[
        "verify", "--suite", "recurrence-poly", "--q", "1/2", "--theta2", "1/4", "-N", "4",
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["failures"], 0);
    let reports = json["reports"].as_array().unwrap();
    assert!(!reports.is_empty());
    for r in reports {
        assert_eq!(r["pass"], true);
        assert_eq!(r["backend"], "exact");
        assert_eq!(r["max_residual"], "0");
    }
}

#[test]
fn verify_reports_failure_exit_code() {
    let out = qkraw(&[
        "verify", "--suite", "duality-qtm-aff", "--q", "1/2", "--theta2", "1/4", "-N", "3",
        "--inject-fault",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["failures"].as_u64().unwrap() > 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qkraw(&["eval"]).status.code(), Some(2)); // missing quantity
    assert_eq!(qkraw(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        qkraw(&["verify", "--suite", "no-such-family"]).status.code(),
        Some(2)
    );
}

#[test]
fn domain_errors_exit_three() {
    let out = qkraw(&[
        "eval", "--quantity", "chi", "--q", "1.5", "--theta2", "1/4", "-N", "1", "-n", "0", "-x",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn runs_are_byte_identical() {
    let args = [
        "verify", "--suite", "backward-poly", "--q", "2/3", "--theta2", "1/2", "-N", "3", "--seed",
        "7",
    ];
    let a = qkraw(&args);
    let b = qkraw(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn precision_env_is_honored() {
    let out = Command::new(env!("CARGO_BIN_EXE_qkraw"))
        .args([
            "eval", "--quantity", "chi", "--q", "0.5", "--theta2", "0.5", "-N", "1", "-n", "0",
            "-x", "0",
        ])
        .env("QKRAW_PRECISION", "40")
        .output()
        .unwrap();
    let json = stdout_json(&out);
    assert_eq!(json["metadata"]["precision"], 40);
    // sqrt(1 - 1/2) at 40 digits
    let v = value_of(&json, "chi");
    assert!(v.starts_with("0.70710678118654752440"), "{v}");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "# shared parameters").unwrap();
    writeln!(f, "q = 1/2").unwrap();
    writeln!(f, "theta2 = 1/4").unwrap();
    writeln!(f, "N = 1").unwrap();
    writeln!(f, "backend = exact").unwrap();
    drop(f);
    let cfg = path.to_str().unwrap();

    let out = qkraw(&[
        "eval", "--config", cfg, "--quantity", "chi", "-n", "0", "-x", "1",
    ]);
    let json = stdout_json(&out);
    assert_eq!(value_of(&json, "chi"), "-1/2");

    // flag wins over the file value
    let out = qkraw(&[
        "eval", "--config", cfg, "--quantity", "chi", "-n", "0", "-x", "1", "--theta2", "1/9",
    ]);
    let json = stdout_json(&out);
    assert_eq!(value_of(&json, "chi"), "-1/3");
}

#[test]
fn limit_converges_to_classical_value() {
    let out = qkraw(&[
        "limit", "--tau", "pi/4", "-N", "2", "-n", "1", "-x", "1",
    ]);
    let json = stdout_json(&out);
    let diff: f64 = value_of(&json, "abs_diff").parse().unwrap();
    assert!(diff < 1e-6, "extrapolation off by {diff}");
}

#[test]
fn out_file_matches_stdout_payload() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let args_file = [
        "table", "--q", "0.5", "--theta2", "0.25", "-N", "1", "--out",
        path.to_str().unwrap(),
    ];
    let out = qkraw(&args_file);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let from_file = std::fs::read(&path).unwrap();
    let direct = qkraw(&["table", "--q", "0.5", "--theta2", "0.25", "-N", "1"]);
    assert_eq!(from_file, direct.stdout);
}
