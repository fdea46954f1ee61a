use std::collections::BTreeMap;
use std::process::Command;

use serde_json::Value;
use tractorlab::suite::{run_suite, MetricSource, SuiteConfig};

fn config(metric: &str, suites: &[&str], points: usize, seed: u64) -> SuiteConfig {
    let mut c = SuiteConfig::new(MetricSource::parse(metric, BTreeMap::new()).unwrap());
    c.suites = suites.iter().map(|s| s.to_string()).collect();
    c.points = points;
    c.seed = seed;
    c
}

fn without_timing(json: &str) -> Value {
    let mut v: Value = serde_json::from_str(json).unwrap();
    v["environment"]["timing"].take();
    v
}

#[test]
fn empty_suite_list_reports_environment_only() {
    let r = run_suite(&config("flat_euclidean", &[], 5, 0)).unwrap();
    assert!(r.checks.is_empty());
    let v: Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["environment"]["seed"], 0);
    assert!(v["environment"]["version"].is_string());
}

#[test]
fn flat_equivalence_passes() {
    let r = run_suite(&config("flat_euclidean", &["tractor-equivalence"], 20, 1)).unwrap();
    assert!(r.all_passed(), "{}", r.to_text());
    for c in &r.checks {
        assert!(c.max_residual.unwrap() < 1e-10, "{}", c.check_id);
    }
}

#[test]
fn sphere_passes_every_suite() {
    let r = run_suite(&config("round_sphere", &["all"], 4, 2)).unwrap();
    assert!(r.all_passed(), "{}", r.to_text());
    assert!(r.checks.iter().any(|c| c.check_id == "tractor-weyl.ae-witness"));
}

#[test]
fn same_seed_same_report() {
    let c = config("poly_perturbation", &["dressing-residual", "brst-algebra"], 4, 9);
    let a = run_suite(&c).unwrap().to_json();
    let mut single = c.clone();
    single.threads = Some(1);
    let b = run_suite(&single).unwrap().to_json();
    assert_eq!(without_timing(&a), without_timing(&b));
    let other = run_suite(&config("poly_perturbation", &["dressing-residual", "brst-algebra"], 4, 10)).unwrap();
    assert_ne!(without_timing(&a), without_timing(&other.to_json()));
}

#[test]
fn tight_tolerance_fails_honestly() {
    let mut c = config("poly_perturbation", &["dressing-k1"], 10, 0);
    c.tol_overrides.insert("dressing-k1".into(), 1e-17);
    let r = run_suite(&c).unwrap();
    assert!(!r.all_passed());
    assert!(!r.warnings.is_empty());
    let v: Value = serde_json::from_str(&r.to_json()).unwrap();
    let check = &v["checks"][0];
    assert_eq!(check["passed"], false);
    assert_eq!(check["worst_point"].as_array().unwrap().len(), 4);
    assert!(check["block_diff"].as_object().unwrap().contains_key("connection"));
}

#[test]
fn configuration_errors_come_first() {
    assert!(run_suite(&config("flat_euclidean", &["nope"], 5, 0)).is_err());
    assert!(run_suite(&config("no_such_metric", &["all"], 5, 0)).is_err());
    let mut c = config("flat_euclidean", &["all"], 5, 0);
    c.tol_overrides.insert("riemann-laws.unknown".into(), 1e-9);
    assert!(run_suite(&c).is_err());
    assert!(run_suite(&config("flat_euclidean", &["all"], 0, 0)).is_err());
}

#[test]
fn binary_exit_codes_and_report_file() {
    let exe = env!("CARGO_BIN_EXE_tractorlab");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let status = Command::new(exe)
        .args(["run", "--metric", "flat_euclidean", "--suite", "dressing-k1", "--points", "3"])
        .arg("--report")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["summary"]["passed"], 1);

    let status = Command::new(exe)
        .args(["run", "--metric", "poly_perturbation", "--suite", "dressing-k1", "--points", "3"])
        .args(["--tol-override", "dressing-k1.k1-erasure=1e-18", "--format", "text"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stdout).starts_with("warning"));

    let status = Command::new(exe)
        .args(["run", "--metric", "flat_euclidean", "--suite", "bogus"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}
