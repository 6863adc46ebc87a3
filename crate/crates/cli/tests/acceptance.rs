//! Acceptance gate for the command-line contract: exit codes, byte-level
//! determinism, schema conformance, and the runtime budget of the full
//! default verification suite.

use std::process::Command;
use std::time::Instant;

fn qkraw(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qkraw"))
        .args(args)
        .env_remove("QKRAW_PRECISION")
        .output()
        .expect("binary runs")
}

/// Structural validation against the shipped schema: required keys present,
/// no unknown top-level keys, and the declared per-field types hold.
fn conforms_to_schema(json: &serde_json::Value) -> bool {
    let schema: serde_json::Value = serde_json::from_str(include_str!(
        "../schema/result.schema.json"
    ))
    .unwrap();
    let props = schema["properties"].as_object().unwrap();
    let required: Vec<&str> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let obj = match json.as_object() {
        Some(o) => o,
        None => return false,
    };
    if required.iter().any(|k| !obj.contains_key(*k)) {
        return false;
    }
    if obj.keys().any(|k| !props.contains_key(k)) {
        return false;
    }
    for (key, value) in obj {
        let declared = props[key]["type"].as_str().unwrap();
        let ok = match declared {
            "string" => value.is_string(),
            "object" => value.is_object(),
            "array" => value.is_array(),
            "integer" => value.is_u64(),
            _ => false,
        };
        if !ok {
            return false;
        }
    }
    true
}

#[test]
fn criterion_9_cli_contract() {
    let t0 = Instant::now();
    let mut ok = true;

    // exit codes: 0 pass, 1 identity failure, 2 usage, 3 domain
    let pass = qkraw(&[
        "verify", "--suite", "backward-poly", "--q", "1/2", "--theta2", "1/4", "-N", "3",
    ]);
    ok &= pass.status.code() == Some(0);
    let fail = qkraw(&[
        "verify", "--suite", "backward-poly", "--q", "1/2", "--theta2", "1/4", "-N", "3",
        "--inject-fault",
    ]);
    ok &= fail.status.code() == Some(1);
    ok &= qkraw(&["verify", "--suite", "bogus"]).status.code() == Some(2);
    ok &= qkraw(&[
        "eval", "--quantity", "chi", "--q", "2", "--theta2", "1/4", "-N", "1", "-n", "0", "-x", "0",
    ])
    .status
    .code()
        == Some(3);

    // determinism: identical invocations produce identical bytes
    let again = qkraw(&[
        "verify", "--suite", "backward-poly", "--q", "1/2", "--theta2", "1/4", "-N", "3",
    ]);
    ok &= pass.stdout == again.stdout;

    // schema conformance of each subcommand's JSON output
    for args in [
        vec!["eval", "--quantity", "qtm", "--q", "1/2", "--theta2", "1/4", "-N", "2", "-n", "1",
             "-x", "1", "--backend", "exact"],
        vec!["table", "--q", "0.5", "--theta2", "0.25", "-N", "1"],
        vec!["limit", "--tau", "pi/4", "-N", "1", "-n", "0", "-x", "0"],
    ] {
        let out = qkraw(&args);
        ok &= out.status.success();
        let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        ok &= conforms_to_schema(&json);
    }

    // the full default suite finishes inside the budget and reports clean
    let full = qkraw(&["verify"]);
    ok &= full.status.code() == Some(0);
    let json: serde_json::Value = serde_json::from_slice(&full.stdout).unwrap();
    ok &= json["failures"] == 0;
    ok &= conforms_to_schema(&json);

    let elapsed = t0.elapsed().as_secs_f64();
    println!(
        "acceptance 9 (CLI contract): {} [{elapsed:.1}s]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion 9 (CLI contract) failed");
    assert!(elapsed < 120.0, "criterion 9 exceeded 120s budget: {elapsed:.1}s");
}
