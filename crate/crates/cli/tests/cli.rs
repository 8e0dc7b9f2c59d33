use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const NOMINAL: &str = r#"{"n":1,"np":0,"nd":1,"ne":1,"nu":1,"ny":1,"ts":0.1,
  "structure":{"scalar_blocks":[],"full_blocks":[]},
  "A":[[0.5]],"B1":[[1.0]],"B2":[[1.0]],"C1":[[1.0]],"C2":[[1.0]]}"#;

const UNSTABLE: &str = r#"{"n":1,"np":0,"nd":1,"ne":1,"nu":1,"ny":1,"ts":0.1,
  "structure":{"scalar_blocks":[],"full_blocks":[]},
  "A":[[1.5]],"B1":[[1.0]],"B2":[[1.0]],"C1":[[1.0]],"C2":[[1.0]]}"#;

/// Unstable, uncertain, controllable; the error weighs state and input.
const UNCERTAIN: &str = r#"{"n":2,"np":1,"nd":1,"ne":3,"nu":1,"ny":1,"ts":0.1,
  "structure":{"scalar_blocks":[1],"full_blocks":[]},
  "A":[[1.05,0.1],[0.0,0.8]],"B0":[[0.2],[0.0]],"B1":[[0.0],[1.0]],"B2":[[0.0],[1.0]],
  "C0":[[1.0,0.0]],"C1":[[1.0,0.0],[0.0,1.0],[0.0,0.0]],"D12":[[0.0],[0.0],[1.0]],
  "C2":[[1.0,0.0]],"D21":[[1.0]]}"#;

fn robh2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robh2")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_nominal_scalar() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", NOMINAL);
    let r = json(&robh2(&["analyze", s(&plant)]));
    let gamma = r["result"]["gamma"].as_f64().unwrap();
    assert!((gamma - (4.0f64 / 3.0).sqrt()).abs() < 1e-4, "{gamma}");
    assert_eq!(r["command"], "analyze");
    assert_eq!(r["inputs"]["plant"]["sha256"].as_str().unwrap().len(), 64);
    assert!(r.get("timings").is_none());
}

#[test]
fn unstable_plant_has_no_certificate() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", UNSTABLE);
    let out = robh2(&["analyze", s(&plant)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", r#"{"n":1,"A":[[1.0,2.0]]}"#);
    assert_eq!(robh2(&["analyze", s(&plant)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(robh2(&["analyze", s(&missing)]).status.code(), Some(2));
    assert_eq!(robh2(&["example", "nope", "--emit", s(dir.path())]).status.code(), Some(2));
}

#[test]
fn emitted_examples_validate() {
    let dir = TempDir::new().unwrap();
    let r = json(&robh2(&["example", "two-disk", "--emit", s(dir.path())]));
    let files = r["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    assert_eq!(files[0]["n"], 8);
    for f in files {
        let text = std::fs::read_to_string(f["path"].as_str().unwrap()).unwrap();
        robh2::validate_plant(robh2::plant_from_json(&text).unwrap()).unwrap();
    }
}

#[test]
fn synth_simulate_round() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", UNCERTAIN);
    let k = dir.path().join("k.json");
    let r = json(&robh2(&["synth", "sf", s(&plant), "-o", s(&k), "--tol", "1e-8"]));
    let gamma = r["result"]["gamma"].as_f64().unwrap();
    assert!(r["verification"]["gamma"].as_f64().unwrap() <= gamma * (1.0 + 1e-3));
    assert_eq!(r["flags"]["tol"], 1e-8);
    assert!(k.exists());

    let r = json(&robh2(&["analyze", s(&plant), "--controller", s(&k)]));
    assert!(r["result"]["gamma"].as_f64().unwrap() <= gamma * (1.0 + 1e-3));

    let noise = |seed: &str| robh2(&["simulate", s(&plant), s(&k), "--white-noise", "--runs", "4", "--horizon", "256", "--burn-in", "64", "--seed", seed]);
    let (a, b) = (noise("7"), noise("7"));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, noise("8").stdout);
    assert_eq!(json(&a)["flags"]["seed"], 7);

    let csv = dir.path().join("step.csv");
    let r = json(&robh2(&["simulate", s(&plant), s(&k), "--step", "1", "--delta", "-0.5", "--csv", s(&csv), "--states", "0..2"]));
    // No integral action: a constant disturbance leaves a steady offset.
    assert!(r["result"]["states"]["peak"].as_f64().unwrap() > 0.0);
    assert_eq!(r["result"]["delta"], serde_json::json!([-0.5]));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("k,d_1,e_1,e_2,e_3"));
    assert_eq!(text.lines().count(), 1001);
}

#[test]
fn synth_gs_certificate_checks() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", UNCERTAIN);
    let k = dir.path().join("k.json");
    let r = json(&robh2(&["synth", "gs", s(&plant), "-o", s(&k)]));
    assert_eq!(r["verification"]["method"], "certificate");
    assert!(r["verification"]["min_margin"].as_f64().unwrap() > 0.0);
    assert!(r["result"]["round_trip_error"].as_f64().unwrap() < 1e-6);
    let gamma = r["result"]["gamma"].as_f64().unwrap();
    let r = json(&robh2(&["analyze", s(&plant), "--controller", s(&k)]));
    assert!(r["result"]["gamma"].as_f64().unwrap() <= gamma * (1.0 + 1e-3));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let plant = write(&dir, "p.json", NOMINAL);
    let out = robh2(&["simulate", s(&plant), s(&plant), "--white-noise", "--induced"]);
    assert_eq!(out.status.code(), Some(2));
    let out = robh2(&["simulate", s(&plant), s(&plant), "--white-noise", "--csv", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}
