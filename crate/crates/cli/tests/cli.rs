use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn polyflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyflow"))
        .args(args)
        .current_dir(dir)
        .env_remove("POLYFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn summary(dir: &Path, prefix: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{prefix}_summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

const CIRCLE: &str = r#"{
    "target": {"curvature": 0.0, "dim": 2},
    "grid": {"sizes": [256], "lengths": [6.283185307179586]},
    "initial_map": {"name": "Circle", "params": {"r": 1.0}},
    "action": "Energies",
    "output_prefix": "out/circle"
}"#;

const EQUATOR: &str = r#"{
    "target": {"curvature": 1.0, "dim": 2},
    "grid": {"sizes": [128], "lengths": [6.283185307179586]},
    "initial_map": {"name": "GreatCircleS2"},
    "action": "Audit",
    "metric": "Induced",
    "output_prefix": "equator"
}"#;

const H2_FLOW: &str = r#"{
    "target": {"curvature": -1.0, "dim": 2},
    "grid": {"sizes": [128], "lengths": [6.283185307179586]},
    "initial_map": {"name": "PerturbedGeodesicH2", "params": {"amplitude": 0.05, "k": 3}},
    "action": "Flow",
    "flow": {"kind": "Triharmonic", "metric_policy": "FixedPrescribed"},
    "output_prefix": "h2"
}"#;

#[test]
fn energies_of_unit_circle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", CIRCLE);
    let out = polyflow(&["run", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "out/circle");
    let e2 = s["energies"]["E2"].as_f64().unwrap();
    assert!((e2 - std::f64::consts::PI).abs() < 1e-8);
    assert_eq!(s["status"], "ok");
    assert!(!dir.path().join("out/circle_trace.csv").exists());
}

#[test]
fn audit_of_geodesic_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", EQUATOR);
    let out = polyflow(&["audit", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "equator");
    let checks = s["audit"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn audit_subcommand_overrides_the_action() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", CIRCLE);
    let out = polyflow(&["audit", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(summary(dir.path(), "out/circle")["audit"].is_object());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = write_config(dir.path(), "m.json", "{ not json");
    assert_eq!(polyflow(&["run", &malformed], dir.path()).status.code(), Some(2));
    let unknown = write_config(dir.path(), "u.json", &CIRCLE.replace("\"action\"", "\"extra\": 1, \"action\""));
    assert_eq!(polyflow(&["run", &unknown], dir.path()).status.code(), Some(2));
    let bad_params = write_config(dir.path(), "b.json", &CIRCLE.replace("\"r\": 1.0", "\"r\": 0.7"));
    let out = polyflow(&["run", &bad_params], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad parameters"));
    assert_eq!(polyflow(&["run", "missing.json"], dir.path()).status.code(), Some(2));

    let cfg = write_config(dir.path(), "c.json", CIRCLE);
    let out = Command::new(env!("CARGO_BIN_EXE_polyflow"))
        .args(["run", &cfg])
        .current_dir(dir.path())
        .env("POLYFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flow_writes_a_deterministic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "f.json", H2_FLOW);
    let out = polyflow(&["run", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("h2_trace.csv")).unwrap();
    let first = fs::read_to_string(dir.path().join("h2_summary.json")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iter,E,E2,E3,Etilde4,L4_tension,sup_tau,sup_descent,dt");
    let rows: Vec<Vec<f64>> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 1);
    assert_eq!(rows[0][0], 0.0);
    assert!(rows.windows(2).all(|w| w[1][3] <= w[0][3]));

    let s: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(s["flow"]["monotone"], true);
    assert_eq!(s["probe"]["verdict"], "minimal");
    assert_eq!(s["flow"]["termination"], "Converged");

    let threaded = Command::new(env!("CARGO_BIN_EXE_polyflow"))
        .args(["run", &cfg])
        .current_dir(dir.path())
        .env("POLYFLOW_THREADS", "1")
        .output()
        .unwrap();
    assert!(threaded.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("h2_trace.csv")).unwrap(), trace);
    assert_eq!(fs::read_to_string(dir.path().join("h2_summary.json")).unwrap(), first);
}

#[test]
fn variation_check_on_circle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &CIRCLE.replace("\"Energies\"", "\"VariationCheck\""));
    let out = polyflow(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = summary(dir.path(), "out/circle")["variation"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 4);
}

#[test]
fn examples_lists_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyflow(&["examples", "--json"], dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        ["Circle", "PerturbedGeodesicH2", "GreatCircleS2", "TorusCliffordLike", "GraphSurface"]
    );
}
