//! End-to-end tests of the `latticeflow` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latticeflow")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("latticeflow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn bkw_check_reports_json_and_succeeds() {
    let out = run(&["bkw-check", "--n", "2", "--k", "1", "--lambda", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["abs_error"].as_f64().unwrap() < report["tolerance"].as_f64().unwrap());
}

#[test]
fn lambda_out_of_range_is_a_usage_error() {
    let out = run(&["bkw-check", "--lambda", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"model":"loop-o2","x":0.8,"temperature":1}"#).unwrap();
    let out = run(&["sample", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature"));
}

#[test]
fn conflicting_flag_is_a_usage_error() {
    let path = scratch("conf.json");
    std::fs::write(&path, r#"{"model":"loop-o2","x":0.8}"#).unwrap();
    let out = run(&["sample", "--config", path.to_str().unwrap(), "--x", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_replays_byte_for_byte() {
    let first = scratch("first.csv");
    let second = scratch("second.csv");
    let args = [
        "sample",
        "--model",
        "loop-o2",
        "--x",
        "0.8",
        "--domain",
        "hex_ball:2",
        "--sweeps",
        "200",
        "--burn-in",
        "20",
        "--thin",
        "5",
        "--chains",
        "2",
        "--seed",
        "7",
        "-o",
    ];
    let mut a = args.to_vec();
    a.push(first.to_str().unwrap());
    assert_eq!(run(&a).status.code(), Some(0));
    let out = run(&["sample", "--from-manifest", first.to_str().unwrap(), "-o", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(&first).unwrap();
    assert_eq!(a, std::fs::read(&second).unwrap());
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest {"));
    assert!(lines.next().unwrap().starts_with("chain,sweep,h_centre"));
    // (sweeps - burn_in) / thin records per chain.
    assert_eq!(lines.count(), 2 * 36);
}

#[test]
fn measure_writes_estimate_rows() {
    let out = run(&[
        "measure",
        "--model",
        "loop-o2",
        "--x",
        "1",
        "--observable",
        "height-variance",
        "--sizes",
        "1,2,3",
        "--sweeps",
        "300",
        "--burn-in",
        "50",
        "--thin",
        "1",
        "--fit",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "observable,name,n,mean,std_error,n_samples");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().any(|r| r.starts_with("height_variance,")));
    assert!(rows.iter().any(|r| r.contains("log_fit_slope")));
}

#[test]
fn enumerate_distribution_sums_to_one() {
    let out =
        run(&["enumerate", "--model", "loop-o2", "--x", "0.8", "--domain", "hex_ball:1", "--representation", "loops"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let probs = v["distribution"]["probs"].as_array().unwrap();
    assert_eq!(probs.len(), v["distribution"]["states"].as_array().unwrap().len());
    let total: f64 = probs.iter().map(|p| p.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn verify_passes_exact_checks() {
    let out = run(&["verify", "--checks", "1,6,7", "-o", scratch("report.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn injected_fault_fails_the_named_check() {
    let out =
        run(&["verify", "--checks", "6", "--inject-fault", "bkw-phase", "-o", scratch("fault.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BKW identity"));
}

#[test]
fn fit_with_too_few_sizes_is_a_usage_error() {
    let out = run(&["measure", "--model", "loop-o2", "--observable", "height-variance", "--sizes", "2,4", "--fit"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unsupported_observable_is_a_usage_error() {
    let out = run(&["measure", "--model", "fk", "--observable", "crossing", "--sizes", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["enumerate", "--model", "fk", "--representation", "loops"]);
    assert_eq!(out.status.code(), Some(2));
}
