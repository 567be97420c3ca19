use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_hieranderson");

const SMALL: &str = r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":6},"potential":{"kind":"cauchy","u":0,"v":1},
  "c":0.8,"R":100,"seed_repeats":2,"min_passes":1,"eta_realizations":40,"windows":[[-2,0],[0,2]],
  "experiments":["wegner","decoupling","poisson"],"master_seed":3}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn hieranderson(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn results_without_timestamp(dir: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(dir.join("results.json")).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v["manifest_echo"].as_object_mut().unwrap().remove("output_dir");
    v["manifest_echo"].as_object_mut().unwrap().remove("workers");
    v
}

#[test]
fn validate_echoes_resolved_config_and_dimension() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":4},"c":0.8}"#);
    let out = hieranderson(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d = 0.6667"));
    let echo: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echo["config"]["model"]["trunc"], 4);
    assert_eq!(echo["decoupling_radius"], 3);
}

#[test]
fn invalid_configs_exit_with_usage_code() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"model":{"kind":"hierarchical","n":2,"rho":4,"k":4},"c":0.8}"#, "d<1"),
        (r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":4},"c":0.8,"windows":[[0,2],[1,3]]}"#, "overlap"),
        (r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":4},"bogus":1}"#, "bogus"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), text);
        let out = hieranderson(&["validate", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(1), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{err}");
    }
    assert_eq!(hieranderson(&["run"]).status.code(), Some(1));
    assert_eq!(hieranderson(&["validate", "--config", "/nonexistent.json"]).status.code(), Some(1));
}

#[test]
fn list_experiments_names_every_kind() {
    let out = hieranderson(&["list-experiments"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["dos", "eta", "wegner", "minami", "decoupling", "hypotheses", "poisson", "lattice"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn empty_experiment_list_writes_empty_report_set() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":4},"experiments":[]}"#);
    let out_dir = dir.path().join("out");
    let out = hieranderson(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = results_without_timestamp(&out_dir);
    assert_eq!(v["reports"].as_array().unwrap().len(), 0);
}

#[test]
fn reruns_are_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let mut seen = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let out_dir = dir.path().join(name);
        let out = hieranderson(&["run", "--config", &cfg, "--workers", workers, "--out", out_dir.to_str().unwrap()]);
        assert!(matches!(out.status.code(), Some(0 | 2 | 3)), "{}", String::from_utf8_lossy(&out.stderr));
        seen.push((results_without_timestamp(&out_dir), fs::read(out_dir.join("counts.csv")).unwrap()));
    }
    assert_eq!(seen[0], seen[1]);
    assert_eq!(seen[0], seen[2]);
}

#[test]
fn run_writes_commented_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out_dir = dir.path().join("out");
    let out = hieranderson(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "9",
        "--emit-spectra",
        "--emit-matrix",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(matches!(out.status.code(), Some(0 | 2 | 3)));
    let v = results_without_timestamp(&out_dir);
    assert_eq!(v["manifest_echo"]["master_seed"], 9);
    assert_eq!(v["reports"].as_array().unwrap().len(), 3);
    for file in ["counts.csv", "gaps.dat", "spectra.csv", "matrix.csv"] {
        let text = fs::read_to_string(out_dir.join(file)).unwrap();
        assert!(text.starts_with('#'), "{file}");
    }
    let counts = fs::read_to_string(out_dir.join("counts.csv")).unwrap();
    assert_eq!(counts.lines().filter(|l| !l.starts_with('#')).count(), 100);
    let matrix = fs::read_to_string(out_dir.join("matrix.csv")).unwrap();
    assert_eq!(matrix.lines().filter(|l| !l.starts_with('#')).count(), 64);
    let status = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r["records"].as_array().unwrap())
        .map(|r| r["status"].as_str().unwrap().to_string())
        .collect::<Vec<_>>();
    let code = out.status.code().unwrap();
    let want = if status.iter().any(|s| s == "fail") {
        2
    } else if status.iter().any(|s| s == "inconclusive") {
        3
    } else {
        0
    };
    assert_eq!(code, want);
}
