use std::process::{Command, Output};

fn bergnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bergnorm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn constants_single_row() {
    let o = bergnorm(&["constants"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["header"]["tool"], "bergnorm");
}

#[test]
fn constants_sweep_and_csv() {
    let o = bergnorm(&["constants", "--alpha", "0.5,1,2", "--p", "2,4", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let body = stdout(&o);
    assert!(body.starts_with("# bergnorm constants csv v1\n"));
    assert_eq!(body.lines().filter(|l| !l.starts_with('#')).count(), 7);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"n": 3, "alpha": [0.5, 1.0], "p": 2.0}"#).unwrap();
    let out = dir.path().join("report.json");
    let o = bergnorm(&["constants", "--config", cfg.to_str().unwrap(), "--alpha", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["header"]["config"]["n"], serde_json::json!([3]));
    assert_eq!(v["header"]["config"]["alpha"], serde_json::json!([2.0]));
    assert_eq!(v["rows"][0]["params"]["m"], 2);
}

#[test]
fn same_file_twice_is_byte_identical() {
    let a = bergnorm(&["bracket", "T", "--trials", "5", "--seed", "11"]);
    let b = bergnorm(&["bracket", "T", "--trials", "5", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_suites_exit_codes() {
    assert_eq!(bergnorm(&["verify", "identities"]).status.code(), Some(0));
    assert_eq!(bergnorm(&["verify", "lemma1", "--format", "csv"]).status.code(), Some(0));
    assert_eq!(bergnorm(&["verify", "nonsense"]).status.code(), Some(2));
}

#[test]
fn empty_sweep_means_nothing_ran() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(&cfg, r#"{"p": []}"#).unwrap();
    assert_eq!(bergnorm(&["verify", "identities", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bergnorm(&["constants", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn usage_errors() {
    assert_eq!(bergnorm(&["bracket", "Q"]).status.code(), Some(2));
    assert_eq!(bergnorm(&["constants", "--radial-order", "2"]).status.code(), Some(2));
    assert_eq!(bergnorm(&["constants", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(bergnorm(&["constants", "--config", "/nonexistent/run.json"]).status.code(), Some(2));
    assert_eq!(bergnorm(&[]).status.code(), Some(2));
}

#[test]
fn inadmissible_sweep_is_a_total_failure() {
    let o = bergnorm(&["constants", "--n", "3", "--m", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["rows"][0]["error"].as_str().unwrap().contains("must exceed"));
}

#[test]
fn audit_always_exits_zero() {
    let o = bergnorm(&["audit", "--n", "3", "--m", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().is_empty());
    let o = bergnorm(&["audit", "--p", "2,4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 12);
}
