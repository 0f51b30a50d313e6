//! End-to-end runs of the `charwave` binary.

use std::path::Path;
use std::process::Command;

use charwave::chart::{Bump, DatumSpec};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

/// Writes `config` into a fresh directory and runs `charwave <command>` on
/// it; returns the exit code and the directory (outputs are in `out/`).
fn run(command: &str, config: &Value) -> (i32, TempDir) {
    let (code, _, dir) = run_with_stderr(command, config);
    (code, dir)
}

fn run_with_stderr(command: &str, config: &Value) -> (i32, String, TempDir) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_charwave"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("--threads")
        .arg("2")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned(), dir)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let k = rd.headers().unwrap().iter().position(|h| h == name).unwrap();
    rd.records().map(|r| r.unwrap()[k].parse().unwrap()).collect()
}

fn checked_manifest(out: &Path) -> Value {
    let m = read_json(&out.join("manifest.json"));
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for f in outputs {
        let bytes = std::fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        assert_eq!(f["sha256"].as_str().unwrap(), format!("{:x}", Sha256::digest(&bytes)));
    }
    m
}

fn datum() -> Value {
    json!(DatumSpec { u0: vec![Bump::new(0.0, 1.0, 0.5)], u1: vec![Bump::new(0.2, 0.7, 0.3)], transport: 0.0 })
}

#[test]
fn solve_writes_checksummed_outputs() {
    let (code, dir) = run("solve", &json!({ "datum": datum(), "t_max": 0.5, "h": 1.0 / 32.0 }));
    assert_eq!(code, 0);
    let out = dir.path().join("out");
    let m = checked_manifest(&out);
    assert_eq!(m["command"], "solve");
    assert!(m["config_sha256"].is_string());
    assert!(out.join("chart.csv").exists() && out.join("summary.json").exists());
}

#[test]
fn slices_conserve_energy() {
    let cfg = json!({ "datum": datum(), "t_max": 1.0, "h": 1.0 / 64.0 });
    let (code, dir) = run("slice", &cfg);
    assert_eq!(code, 0);
    let out = dir.path().join("out");
    checked_manifest(&out);
    let errors = csv_column(&out.join("energy.csv"), "relative_error");
    assert_eq!(errors.len(), 11);
    assert!(errors.iter().all(|e| *e < 1e-3), "{errors:?}");
}

#[test]
fn singular_time_of_a_steep_datum() {
    let spec = DatumSpec { u0: vec![Bump::new(0.0, 1.0, 1.5)], u1: Vec::new(), transport: 1.0 };
    let (code, dir) = run("singularities", &json!({ "datum": spec, "t_max": 1.0, "h": 1.0 / 128.0 }));
    assert_eq!(code, 0);
    let report = read_json(&dir.path().join("out/singularities.json"));
    let t = report["first_time"].as_f64().unwrap();
    assert!((t - 0.706).abs() < 2e-3, "{t}");
}

#[test]
fn constant_speed_lengths_do_not_grow() {
    let center = DatumSpec::right_moving(Bump::new(0.0, 0.5, 0.3));
    let cfg = json!({
        "speed": { "kind": "constant", "c": 1.0 },
        "straddle": { "center": center, "deltas": [0.1, 0.05] },
        "taus": [0.0, 0.5, 1.0],
        "thetas": 2,
        "h": 1.0 / 64.0,
    });
    let (code, dir) = run("lipschitz", &cfg);
    assert_eq!(code, 0);
    let out = dir.path().join("out");
    checked_manifest(&out);
    for r in csv_column(&out.join("lipschitz.csv"), "ratio") {
        assert!((r - 1.0).abs() < 1e-3, "ratio {r}");
    }
    assert_eq!(read_json(&out.join("summary.json"))["violations"], 0);
}

#[test]
fn bounds_hold_with_the_frozen_constants() {
    let fixture = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../charwave/tests/fixtures/fitted_constants.json"));
    let b = &fixture["bounds"];
    let p = &b["params"];
    let cfg = json!({
        "random_pairs": { "n": 3, "amplitude": b["amplitude"] },
        "seed": b["seed"],
        "h": p["h"], "thetas": p["m"], "eps": p["eps"], "delta": p["delta"], "margin": p["margin"],
        "constants": b["constants"],
    });
    let (code, dir) = run("bounds", &cfg);
    assert_eq!(code, 0);
    let summary = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(summary["upper_violations"], 0);
    assert_eq!(summary["lower_violations"], 0);
}

#[test]
fn configuration_errors_exit_with_two() {
    for cfg in [
        json!({ "t_max": 0.5 }),
        json!({ "datum": datum(), "h": -1.0 }),
        json!({ "datum": datum(), "no_such_field": 1 }),
        json!({ "datum": datum(), "speed": { "kind": "constant", "c": -1.0 } }),
    ] {
        let (code, err, _) = run_with_stderr("solve", &cfg);
        assert_eq!(code, 2, "{cfg}");
        assert!(err.starts_with("configuration error"), "{err}");
    }
    assert_eq!(run("metric", &json!({})).0, 2);
}

#[test]
fn solver_failures_exit_with_three() {
    let path = json!({ "kind": "blend", "start": datum(), "end": datum() });
    let cfg = json!({ "path": path, "energy_cap": 1e-3, "taus": [0.0], "h": 1.0 / 32.0 });
    let (code, err, _) = run_with_stderr("metric", &cfg);
    assert_eq!(code, 3);
    assert!(err.starts_with("solver failure") && err.contains("exceeds the path's cap"), "{err}");
}
