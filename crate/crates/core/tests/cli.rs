//! End-to-end runs of the `ultrafin` binary: exit codes and trace round trips.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ultrafin")).args(args).output().expect("binary runs")
}

fn program(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs").join(name);
    p.to_string_lossy().into_owned()
}

fn scratch(name: &str, body: &str) -> String {
    let dir = std::env::temp_dir().join(format!("ultrafin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn solve_iht_found_and_not_found() {
    let parity = r#"{"kind":"residue","mod":2}"#;
    let ok = bin(&["solve-iht", "--coloring", parity, "--ground", "1..12", "--len", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!(v["status"], "found");
    assert_eq!(v["values"], serde_json::json!([2, 4, 6]));

    // every sequence of length 2 from {1, 2} has the mixed sums 1, 2, 3
    let neg = bin(&["solve-iht", "--coloring", parity, "--ground", "1..2", "--len", "2"]);
    assert_eq!(neg.status.code(), Some(1));
}

#[test]
fn budget_exhaustion_is_a_resource_error() {
    let out = bin(&[
        "solve-iht",
        "--coloring",
        r#"{"kind":"residue","mod":3}"#,
        "--coloring",
        r#"{"kind":"residue","mod":5}"#,
        "--ground",
        "1..30",
        "--len",
        "6",
        "--budget",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let elim = bin(&["eliminate", &program("residue3.uf"), "--budget", "1"]);
    assert_eq!(elim.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_three() {
    let fwd = scratch("fwd.uf", "a(j) = b(j)\nb(j) = { n : n % 2 == j }\ngoal = U(a(0))\n");
    let cyc = scratch("cyc.uf", "a(j) = a(j)\ngoal = U(a(0))\n");
    for args in [
        vec!["eliminate", fwd.as_str()],
        vec!["eliminate", cyc.as_str()],
        vec!["eliminate", "/nonexistent/program.uf"],
        vec!["no-such-command"],
        vec!["solve-iht", "--ground", "1..4", "--coloring", "{not json"],
    ] {
        let out = bin(&args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn eliminate_then_verify_round_trip() {
    let trace = scratch("parity.json", "");
    let out = bin(&["eliminate", &program("parity.uf"), "--out", &trace]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);

    let ok = bin(&["verify", &trace]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));

    // With consecutive generators the evens keep a witness on the last tail
    // but fail the translation check, e.g. 2 + 1 is odd.
    let mut bad = doc.clone();
    assert!(bad["filter"]["generators"].is_array());
    bad["filter"]["generators"] = serde_json::json!([1, 2, 3, 4, 5, 6, 7, 8]);
    let bad_path = scratch("parity-bad.json", &serde_json::to_string(&bad).unwrap());
    let neg = bin(&["verify", &bad_path]);
    assert_eq!(neg.status.code(), Some(1), "{}", String::from_utf8_lossy(&neg.stdout));
}

#[test]
fn eliminate_ss_reports_tails() {
    let out = bin(&["eliminate-ss", &program("parity.uf")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(!v["tails"].as_array().expect("tails").is_empty());
    assert_eq!(v["checks"]["summable"]["violations"], serde_json::json!([]));
}
