use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magic-bullet")).arg("--out-dir").arg(dir).args(args).output().expect("binary runs")
}

fn report(dir: &Path, command: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{command}_report.json"))).expect("report written");
    serde_json::from_str(&text).expect("valid json")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn optimize_defaults_reproduce_the_optimum() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["optimize"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "optimize");
    assert!((f(&r["outputs"]["g_star"]) - 0.1502).abs() < 1e-3);
    assert!((f(&r["outputs"]["p_hit"]) - 0.537_062).abs() < 1e-6);
    assert!((f(&r["outputs"]["p_mb"]) - 0.074_124).abs() < 1e-6);
    assert_eq!(f(&r["config"]["g"]), 0.1502);
    assert_eq!(f(&r["config"]["L"]), 1.0);
    assert!(r["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    for key in ["started_at", "finished_at"] {
        chrono::DateTime::parse_from_rfc3339(r[key].as_str().unwrap()).expect("ISO-8601 timestamp");
    }
    assert!(r["tolerances"]["search_tolerance"].is_number());
}

#[test]
fn config_file_selects_the_approximate_formula() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "formula = \"approx\"\n").unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "optimize"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "optimize");
    assert!((f(&r["outputs"]["g_star"]) - 0.14645).abs() < 1e-5);
    assert!((f(&r["outputs"]["p_mb"]) - 0.0732).abs() < 1e-4);
    // A flag beats the file.
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "optimize", "--formula", "full"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(dir.path(), "optimize")["outputs"]["formula"], "full");
}

#[test]
fn malformed_config_exits_2_without_report() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    for text in ["g = \"high\"\n", "unknown_key = 1\n", "g = 0.1\ng =\n"] {
        fs::write(&cfg, text).unwrap();
        let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "optimize"]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("line"), "{text}");
        assert!(!dir.path().join("optimize_report.json").exists());
    }
    let out = run(dir.path(), &["--config", dir.path().join("missing.toml").to_str().unwrap(), "optimize"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["--g", "0.9", "profile"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["sample", "--plane", "source"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["profile", "--variant", "none"]).status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn sweep_csv() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["sweep", "--g-min", "0", "--g-max", "0.3", "--steps", "301"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("g,p_full,p_approx,p_mb"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 301);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!((rows[150][0] - 0.15).abs() < 1e-12);
    assert!((rows[150][1] - 0.537_062).abs() < 1e-6);
    for r in &rows {
        assert!((r[3] - (2.0 * r[1] - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn sweep_rejects_empty_range() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["sweep", "--g-min", "0", "--g-max", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("sweep_report.json").exists());
}

#[test]
fn sweep_reports_the_certificate_root() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["sweep", "--g-min", "0.25", "--g-max", "0.35", "--steps", "101"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "sweep");
    let changes = r["outputs"]["p_mb_sign_changes"].as_array().unwrap();
    assert_eq!(changes.len(), 1);
    assert!((f(&changes[0]) - 0.3108).abs() < 1e-3);
    assert!((f(&r["outputs"]["p_mb_root"]) - 0.310_825_4).abs() < 1e-7);
}

#[test]
fn profiles_at_the_optimum() {
    let dir = TempDir::new().unwrap();
    let cases = [("planeA", "modal_subtraction", 0.537, 0.01), ("planeB", "modal_subtraction", 0.269, 0.005)];
    for (plane, variant, density, tol) in cases {
        let out = run(dir.path(), &["profile", "--plane", plane, "--variant", variant]);
        assert_eq!(out.status.code(), Some(0));
        let r = report(dir.path(), "profile");
        let mean = f(&r["outputs"]["interval_mean_density"]);
        assert!((mean - density).abs() < tol, "{plane}: {mean}");
        let csv = fs::read_to_string(dir.path().join(format!("profile_{plane}_{variant}.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some("x,re,im,density"));
        assert_eq!(csv.lines().count(), 12_002);
    }
    let out = run(dir.path(), &["profile", "--plane", "source", "--variant", "hard_screen"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "profile");
    assert_eq!(f(&r["outputs"]["interval_probability"]), 0.0);
    assert_eq!(f(&r["outputs"]["interval_density_range"][1]), 0.0);
}

#[test]
fn sampling_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = ["--g", "0.1502", "sample", "--shots", "100000", "--seed", "42"];
    assert_eq!(run(dir.path(), &args).status.code(), Some(0));
    let first = report(dir.path(), "sample");
    assert_eq!(run(dir.path(), &args).status.code(), Some(0));
    let second = report(dir.path(), "sample");
    assert_eq!(first["outputs"].to_string(), second["outputs"].to_string());
    assert!(first["generator"].as_str().unwrap().contains("ChaCha8"));
    let runs = first["outputs"]["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_ne!(runs[0]["seed"], runs[1]["seed"]);
    let bound = f(&first["outputs"]["bound"]);
    assert!((bound - 0.074).abs() < 0.01, "{bound}");
}

#[test]
fn tiny_sample_still_reports() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["sample", "--shots", "10", "--plane", "planeA"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "sample");
    let ci = &r["outputs"]["runs"][0]["ci_95"];
    assert!(f(&ci[1]) - f(&ci[0]) > 0.3);
    assert!(r["outputs"]["warnings"].is_array());
}

#[test]
fn snapshot_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["--g", "0.2", "profile", "--plane", "planeB", "--window", "10", "--n", "2001"]);
    assert_eq!(out.status.code(), Some(0));
    let first = report(dir.path(), "profile");
    let snapshot = dir.path().join("snapshot.toml");
    fs::write(&snapshot, toml::to_string(&first["config"]).unwrap()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_magic-bullet"))
        .args(["--config", snapshot.to_str().unwrap(), "profile"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let second = report(dir.path(), "profile");
    assert_eq!(first["outputs"], second["outputs"]);
    assert_eq!(first["config"], second["config"]);
}

#[test]
fn wrong_kernel_fails_validation() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["validate", "--kernel", "conjugate"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path(), "validate");
    let checks = r["outputs"]["checks"].as_array().unwrap();
    let propagation: Vec<&Value> =
        checks.iter().filter(|c| c["name"].as_str().unwrap().starts_with("propagation.")).collect();
    assert_eq!(propagation.len(), 6);
    assert!(propagation.iter().all(|c| c["passed"] == false));
}

#[test]
fn validation_exit_code_matches_table() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["validate", "--exact-sigma"]);
    let r = report(dir.path(), "validate");
    let checks = r["outputs"]["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(names.contains(&"sigma.exact_minus_approx.im"));
    assert!(names.contains(&"negative_control.min_error"));
    let all_passed = checks.iter().all(|c| c["passed"] == true);
    assert_eq!(out.status.code(), Some(if all_passed { 0 } else { 1 }));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("method_agreement"));
}
