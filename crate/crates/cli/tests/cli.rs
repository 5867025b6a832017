use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cslb(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cslb"))
        .args(args)
        .env("CSLB_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON report")
}

#[test]
fn lemma32_small_grid_passes_with_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = cslb(&["verify-lemma32", "--p", "5", "--r", "2", "--ell", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# cslb "));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("N,q,a,b,m,"));
    assert!(header.ends_with("lhs_re,lhs_im,rhs_re,rhs_im,abs_diff,tolerance,pass"));
    assert!(text.lines().filter(|l| !l.starts_with('#')).skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn bound_report_flags_the_window() {
    let dir = tempfile::tempdir().unwrap();
    let inside = 7f64.powi(14).to_string();
    let out = cslb(&["bound-report", "--p", "7", "--r", "20", "--N", &inside, "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["records"][0]["window_ok"], Value::Bool(true));
    assert_eq!(doc["config"]["command"], "bound-report");
    assert!(doc["version"].is_string());
    let report = &doc["details"]["reports"][0];
    assert_eq!(report["window_lo"], 13.0);
    assert_eq!(report["window_hi"], 16.0);

    let out = cslb(&["bound-report", "--p", "7", "--r", "20", "--N", "7e13", "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["records"][0]["window_ok"], Value::Bool(false));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = cslb(&["verify-lemma32", "--p", "5", "--r", "2", "--ell", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("l <= r"));
    let out = cslb(&["verify-poisson", "--tol-dual", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = cslb(&["verify-poisson", "--p", "6"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = cslb(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_assertion_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = cslb(&["scan-tr", "--j-min", "6", "--j-max", "9", "--ceiling", "0.01"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exhausted_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = cslb(&["verify-theta", "--max-terms", "10"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = |w: &'static str| vec!["scan-s", "--p", "5", "--r", "3", "--N", "40,80,120,160", "--workers", w];
    let one = cslb(&args("1"), dir.path());
    let four = cslb(&args("4"), dir.path());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn cache_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = cslb(&["scan-s", "--p", "5", "--r", "3", "--N", "100"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 1);
    assert!(files[0].to_string_lossy().ends_with(".cslb"));

    let other = tempfile::tempdir().unwrap();
    let flag = other.path().to_str().unwrap();
    let out = cslb(&["scan-s", "--p", "5", "--r", "3", "--N", "100", "--cache-dir", flag], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(other.path()).unwrap().count(), 1);
}

#[test]
fn output_file_and_json_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = cslb(
        &["verify-postnikov", "--s", "1,2", "--format", "json", "--output", path.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["summary"]["records"], 7 + 49);
    assert_eq!(doc["summary"]["failed"], 0);
    assert_eq!(doc["config"]["s"], serde_json::json!([1, 2]));
    assert!(doc["config"].get("workers").is_none());
}
