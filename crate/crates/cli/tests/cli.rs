use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coarselab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coarselab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

const H2_PAIR: &str = r#"{
  "model": { "type": "heintze", "eigenvalues_up": [1.0] },
  "p": [0.0, 0.0],
  "q": [0.0, 3.0],
  "grid_h": 0.05,
  "refine": true
}"#;

#[test]
fn vertical_distance_in_the_hyperbolic_plane() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pair.json", H2_PAIR);
    let out = coarselab(&["dist", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 3.0).abs() < 1e-6, "{v}");
    assert_eq!(v["config"]["grid_h"], 0.05);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pair.json", H2_PAIR);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for target in [&a, &b] {
        let out = coarselab(&["dist", "--config", &cfg, "--format", "csv", "--output", target.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let first = fs::read(&a).unwrap();
    assert!(first.starts_with(b"x1,t,cumulative_length"), "{}", String::from_utf8_lossy(&first));
    assert_eq!(first, fs::read(&b).unwrap());
}

#[test]
fn missing_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{ "model": { "type": "heintze", "eigenvalues_up": [1.0] }, "p": [0.0, 0.0] }"#);
    let out = coarselab(&["dist", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{ "m": 2, "n_max": 3, "colour": 1 }"#);
    let out = coarselab(&["lamplighter-table", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inapplicable_flag_is_rejected() {
    let out = coarselab(&["rho", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lamplighter_table_matches_closed_form() {
    let out = coarselab(&["lamplighter-table", "--n-max", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(v["mismatched"], serde_json::json!([]), "{v}");
}

#[test]
fn certificate_reports_the_gap() {
    let out = coarselab(&["lamplighter-certificate", "--n-max", "8"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["certificate"]["valid"], true, "{v}");
}

#[test]
fn tiny_verification_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "tiny.json",
        r#"{
  "model": { "type": "heintze", "eigenvalues_up": [1.0] },
  "compare_metric": [[2.0, 0.0], [0.0, 1.0]],
  "samples": 5,
  "seed": 1,
  "separation_scale": 4.0,
  "grid_h": 0.1,
  "refine": false,
  "expect": "RoughIsometry"
}"#,
    );
    let out = coarselab(&["verify-heintze", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["report"]["report"]["verdict"], "Inconclusive");
}
