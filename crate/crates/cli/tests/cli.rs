//! End-to-end checks of the `blds` binary: exit codes, JSON outputs, and
//! seeded reproducibility.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_blds");

const TINY_JSON: &str = r#"{
  "m": 3,
  "n": 2,
  "prior": ["1/3", "1/3", "1/3"],
  "budgets": ["0", "1", "1"],
  "sources": [
    {
      "cost": "2",
      "rows": [["1/2", "1/2"], ["1/3", "2/3"], ["1/2", "1/2"]]
    },
    {
      "cost": "1",
      "rows": [["1/2", "1/2"], ["1/2", "1/2"], ["1/4", "3/4"]]
    }
  ]
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("BLDS_SEED")
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("BLDS_SEED")
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn write_tiny(dir: &Path) -> String {
    let path = dir.join("tiny.json");
    std::fs::write(&path, TINY_JSON).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_greedy_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = write_tiny(dir.path());
    let out = run(&["solve", "--instance", &tiny, "--algo", "greedy"]);
    let v = stdout_json(&out);
    assert_eq!(v["cost"], "3");
    assert_eq!(v["feasible"], true);
    let order: Vec<u64> = v["picks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["source"].as_u64().unwrap())
        .collect();
    assert_eq!(order, vec![1, 0]);
    assert!(v["bounds"]["bound_c"].as_f64().unwrap() >= 1.0);
    assert!(v["bounds"]["fast_a"].is_null());
}

#[test]
fn solve_fast_tiny_has_fast_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = write_tiny(dir.path());
    let out = run(&[
        "solve", "--instance", &tiny, "--algo", "fast", "--epsilon", "1/10",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["cost"], "3");
    assert_eq!(v["selected"], serde_json::json!([0, 1]));
    assert!(v["bounds"]["fast_a"].as_f64().unwrap() >= 1.0);
    assert!(v["bounds"]["fast_b"].as_f64().unwrap() >= 1.0);
}

#[test]
fn solve_exact_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = write_tiny(dir.path());
    let out = run(&["solve", "--instance", &tiny, "--algo", "exact"]);
    let v = stdout_json(&out);
    assert_eq!(v["cost"], "3");
}

#[test]
fn infeasible_instance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stuck.json");
    std::fs::write(
        &path,
        r#"{
          "m": 2, "n": 1,
          "prior": ["1/2", "1/2"],
          "budgets": ["0", "1"],
          "sources": [{"cost": "1", "rows": [["1/2", "1/2"], ["1/2", "1/2"]]}]
        }"#,
    )
    .unwrap();
    let out = run(&["solve", "--instance", path.to_str().unwrap(), "--algo", "greedy"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_flag_exits_two() {
    let out = run(&["solve", "--algo", "greedy"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["solve", "--instance", "x.json", "--algo", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_epsilon_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = write_tiny(dir.path());
    let out = run(&[
        "solve", "--instance", &tiny, "--algo", "fast", "--epsilon", "3/2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic_and_env_seeded() {
    let args = ["gen", "--n", "3", "--m", "4", "--r", "1", "--seed", "5"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    // Without --seed, BLDS_SEED picks the stream.
    let base = ["gen", "--n", "3", "--m", "4", "--r", "1"];
    let c = run_env(&base, "BLDS_SEED", "5");
    let d = run_env(&base, "BLDS_SEED", "6");
    assert_eq!(a.stdout, c.stdout);
    assert_ne!(c.stdout, d.stdout);
    let bad = run_env(&base, "BLDS_SEED", "not-a-number");
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn gen_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("inst");
    let out = run(&[
        "gen", "--n", "2", "--m", "3", "--r", "1", "--count", "3", "--seed", "1",
        "--mode", "realizable", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let files: Vec<_> = std::fs::read_dir(&out_dir).unwrap().collect();
    assert_eq!(files.len(), 3);
}

#[test]
fn reduce_builds_selection_instance() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("sc.json");
    std::fs::write(&sc, r#"{"universe_size": 3, "subsets": [[0, 1], [2]]}"#).unwrap();
    let out = run(&["reduce", "--setcover", sc.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["m"], 4);
    assert_eq!(v["n"], 2);
    assert_eq!(v["budgets"][0], "0");
    assert_eq!(v["budgets"][1], "1");
    assert_eq!(v["sources"][0]["cost"], "1");
}

#[test]
fn simulate_writes_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = write_tiny(dir.path());
    let out = run(&[
        "simulate", "--instance", &tiny, "--select", "0,1", "--true-state", "0",
        "--steps", "10", "--seed", "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# "));
    let meta: serde_json::Value = serde_json::from_str(&meta[2..]).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["true_state"], 0);
    assert_eq!(lines.next().unwrap(), "step,theta_1,theta_2,theta_3");
    assert_eq!(lines.count(), 11);
}

#[test]
fn simulate_rejects_confusion_set_instances() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fc.json");
    std::fs::write(
        &path,
        r#"{
          "m": 2, "n": 1,
          "prior": ["1/2", "1/2"],
          "budgets": ["1", "1"],
          "sources": [{"cost": "1", "fc_sets": [[1], [0]]}]
        }"#,
    )
    .unwrap();
    let out = run(&[
        "simulate", "--instance", path.to_str().unwrap(), "--select", "0",
        "--true-state", "0", "--steps", "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_tiny_passes() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = write_tiny(dir.path());
    let out = run(&["verify", "--instance", &tiny]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("monotonicity: ok"));
    assert!(text.contains("submodularity: ok"));
    assert!(text.contains("feasibility equivalence: ok"));
    assert!(text.contains("solvable: ok"));
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bench");
    let out = run(&[
        "bench", "--n", "3", "--m", "5", "--count", "4", "--seed", "2",
        "--r-values", "1,2", "--hist-r", "1", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(report.starts_with("R,idx,h_opt,h_greedy,h_fast,ratio_g,ratio_f,full_cover_f,"));
    assert_eq!(report.lines().count(), 9);
    assert!(out_dir.join("bound_curve.csv").exists());
    assert!(out_dir.join("bound_curve.svg").exists());
    assert!(out_dir.join("hist_greedy_r1.csv").exists());
    assert!(out_dir.join("hist_fast_r1.svg").exists());
}
