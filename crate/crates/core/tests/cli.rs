use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const WALK_HALF: &str = r#"{"kind":"biased_walk_z","p":0.5}"#;
const SELF_LOOP: &str = r#"{"kind":"finite","rows":[[1.0]],"origin":0}"#;

fn homing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homing"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn exit_codes() {
    assert_eq!(homing(&["returns", "--chain", "{not json"]).status.code(), Some(2));
    assert_eq!(homing(&["returns", "--chain", r#"{"kind":"biased_walk_z","p":1.5}"#]).status.code(), Some(2));
    assert_eq!(homing(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(homing(&["simulate", "--chain", WALK_HALF, "--alpha", "0.5"]).status.code(), Some(2));
    assert_eq!(homing(&["phase", "--p-range", "0.2:1.4"]).status.code(), Some(2));
    let budget = homing(&["returns", "--chain", r#"{"kind":"simple_walk_zd","d":4}"#, "--n-max", "200"]);
    assert_eq!(budget.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&budget.stderr).contains("budget"));
}

#[test]
fn returns_writes_series_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let v = json(&homing(&["returns", "--chain", WALK_HALF, "--n-max", "4", "--out", d]));
    assert_eq!(v["n_max"], 4);
    let rows = csv_rows(&dir.path().join("returns.csv"));
    assert_eq!(rows.len(), 5);
    let p = |n: usize| rows[n][1].parse::<f64>().unwrap();
    // central binomial C(2m, m) / 4^m
    assert_eq!(p(0), 1.0);
    assert_eq!(p(1), 0.0);
    assert_eq!(p(2), 0.5);
    assert_eq!(p(4), 0.375);
    let sidecar: Value = serde_json::from_slice(&fs::read(dir.path().join("returns.json")).unwrap()).unwrap();
    assert_eq!(sidecar, v);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn returns_self_loop() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let v = json(&homing(&["returns", "--chain", SELF_LOOP, "--n-max", "3", "--out", d]));
    assert_eq!(v["method"], "finite_chain");
    let rows = csv_rows(&dir.path().join("returns.csv"));
    for row in &rows {
        assert_eq!(row[1].parse::<f64>().unwrap(), 1.0);
    }
    assert_eq!(rows[1][2].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[2][2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn returns_cubic_lattice_beta() {
    let v = json(&homing(&["returns", "--chain", r#"{"kind":"simple_walk_zd","d":3}"#, "--n-max", "60"]));
    let beta = v["value"].as_f64().unwrap();
    assert!((0.33..=0.35).contains(&beta), "{beta}");
    assert_eq!(v["verdict"], "transient");
}

#[test]
fn chain_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.json");
    fs::write(&path, SELF_LOOP).unwrap();
    let v = json(&homing(&["alpha-c", "--chain", path.to_str().unwrap()]));
    assert!((v["alpha_c"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn alpha_c_examples() {
    let v = json(&homing(&["alpha-c", "--chain", WALK_HALF]));
    assert!((v["alpha_c"].as_f64().unwrap() - 0.866025).abs() < 1e-6);
    assert_eq!(v["regime"], "transition");
    assert_eq!(v["at_alpha_c"], "extinction");

    let v = json(&homing(&["alpha-c", "--chain", r#"{"kind":"biased_walk_z","p":0.2}"#]));
    assert_eq!(v["regime"], "no_survival");
    assert!(v["alpha_c"].is_null());
}

#[test]
fn simulate_below_threshold_and_trials_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let v = json(&homing(&[
        "simulate",
        "--chain",
        r#"{"kind":"biased_walk_z","p":0.25}"#,
        "--alpha",
        "0.99",
        "--trials",
        "1000",
        "--seed",
        "42",
        "--emit-trials",
        "--out",
        d,
    ]));
    assert_eq!(v["survived"], 0);
    assert_eq!(v["survived_fraction"], 0.0);
    let lines = fs::read_to_string(dir.path().join("trials.jsonl")).unwrap();
    let trials: Vec<Value> = lines.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(trials.len(), 1000);
    for (i, t) in trials.iter().enumerate() {
        assert_eq!(t["trial"], i);
        assert_eq!(t["status"], "extinct");
    }
}

#[test]
fn simulate_self_loop_survival() {
    let v = json(&homing(&[
        "simulate", "--chain", SELF_LOOP, "--alpha", "0.8", "--trials", "100000", "--seed", "7",
    ]));
    let s = v["survived_fraction"].as_f64().unwrap();
    assert!((s - 0.75).abs() < 0.01, "{s}");
}

#[test]
fn phase_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let v = json(&homing(&[
        "phase", "--p-range", "0.05:0.95", "--alpha-range", "0.5:1", "--p-steps", "19", "--alpha-steps", "3",
        "--n-max", "600", "--out", d,
    ]));
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 19);
    for row in cells {
        let row = row.as_array().unwrap();
        assert_eq!(row.len(), 3);
        let p = row[0]["p"].as_f64().unwrap();
        let expect = if p > 0.25 && p < 0.75 { "transition" } else { "no_survival" };
        assert_eq!(row[0]["regime"], expect, "p = {p}");
        assert!(row[0]["mu"].as_f64().unwrap() < 1.0);
    }
    assert_eq!(csv_rows(&dir.path().join("phase.csv")).len(), 19 * 3);
}

#[test]
fn phase_with_simulation_needs_seed() {
    let args = ["phase", "--p-range", "0.4:0.6", "--alpha-range", "0.9:0.99", "--grid-steps", "2", "--trials-per-cell", "20"];
    assert_eq!(homing(&args).status.code(), Some(2));
    let mut with_seed = args.to_vec();
    with_seed.extend(["--seed", "5", "--birth-cap", "100"]);
    let v = json(&homing(&with_seed));
    assert_eq!(v["cells"][0][0]["mc_survival"]["trials"], 20);
}

#[test]
fn offspring_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let v = json(&homing(&[
        "offspring", "--chain", SELF_LOOP, "--alpha", "0.5", "--samples", "100000", "--seed", "11", "--out", d,
    ]));
    assert!((v["b"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(v["tv_distance"].as_f64().unwrap() < 0.01);
    assert!(dir.path().join("offspring.csv").exists());

    let v = json(&homing(&[
        "offspring", "--chain", r#"{"kind":"biased_walk_z","p":1.0}"#, "--alpha", "0.7", "--samples", "1000", "--seed",
        "1",
    ]));
    assert_eq!(v["b"], 0.0);
    assert_eq!(v["tv_distance"], 0.0);
    assert_eq!(v["histogram"][0]["count"], 1000);
}

#[test]
fn manifest_reruns_are_byte_identical() {
    let run = |dir: &Path| {
        let d = dir.to_str().unwrap();
        json(&homing(&["returns", "--chain", WALK_HALF, "--n-max", "500", "--out", d]));
        json(&homing(&["simulate", "--chain", WALK_HALF, "--alpha", "0.9", "--trials", "300", "--seed", "3", "--out", d]));
        let m: Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
        m
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ma, mb) = (run(a.path()), run(b.path()));
    for name in ["returns.csv", "returns.json", "survival.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["seed"], 3);
    assert_eq!(ma["chain"]["kind"], "biased_walk_z");
    assert_eq!(ma["outputs"]["survival.json"].as_str().unwrap().len(), 64);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, format!(r#"{{"chain": {WALK_HALF}, "alpha": 0.9, "trials": 50, "seed": 9}}"#)).unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&homing(&["--config", c, "simulate"]));
    assert_eq!(v["trials"], 50);
    let v = json(&homing(&["simulate", "--config", c, "--trials", "80"]));
    assert_eq!(v["trials"], 80);
    fs::write(&cfg, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(homing(&["--config", c, "alpha-c"]).status.code(), Some(2));
}
