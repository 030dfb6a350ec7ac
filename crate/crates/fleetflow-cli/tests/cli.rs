//! End-to-end checks of the binary: exit codes, default trace shape,
//! manifest-driven reproducibility, and input immutability.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fleetflow")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).args(args).current_dir(dir).env("FLEETFLOW_LOG", "error").output().unwrap()
}

fn expect_success(dir: &Path, args: &[&str]) {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "fleetflow {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const INSTANCE: &str = r#"{
    "nodes": ["A", "B"],
    "edges": [
        {"id": "ab", "from": "A", "to": "B", "travel_time": 2, "cost": 0.0},
        {"id": "ba", "from": "B", "to": "A", "travel_time": 1, "cost": 0.0}
    ],
    "demand": {
        "ab": {"kind": "step", "atoms": [[3.0, 0.3], [1.0, 0.7]]},
        "ba": {"kind": "lognormal", "mu_log": 0.4, "sigma_log": 0.6, "volume": 0.8}
    },
    "objective": {"kind": "revenue"}
}"#;

#[test]
fn solve_simulate_and_check_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("instance.json"), INSTANCE).unwrap();
    let instance_bytes = std::fs::read(root.join("instance.json")).unwrap();

    expect_success(root, &["solve-static", "--instance", "instance.json", "-o", "solve"]);
    expect_success(
        root,
        &[
            "kkt-check",
            "--instance",
            "instance.json",
            "--plan",
            "solve/plan.json",
            "--cert",
            "solve/cert.json",
        ],
    );
    expect_success(
        root,
        &[
            "simulate",
            "--instance",
            "instance.json",
            "--policy",
            "dynam:plan=solve/plan.json",
            "-o",
            "sim",
        ],
    );
    // Default horizon: 96 steps of 15 minutes.
    let trace = std::fs::read_to_string(root.join("sim/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 97, "header plus one row per step");

    expect_success(root, &["report", "sim/trace.csv", "-o", "report"]);
    assert!(root.join("report/comparison.csv").exists());

    expect_success(root, &["expand", "--instance", "instance.json", "-o", "exp", "--emit-mapping"]);
    assert!(root.join("exp/mapping.json").exists());
    expect_success(root, &["inspect", "--instance", "instance.json", "--edge", "ab", "-o", "insp"]);

    // Inputs are never mutated.
    assert_eq!(std::fs::read(root.join("instance.json")).unwrap(), instance_bytes);

    // Manifests list the run; re-running its argv reproduces outputs
    // bit-identically.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("solve/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "solve-static");
    assert!(manifest["inputs"]["instance.json"].as_str().unwrap().starts_with("fnv1a64:"));
    let first_plan = std::fs::read(root.join("solve/plan.json")).unwrap();
    expect_success(root, &["solve-static", "--instance", "instance.json", "-o", "solve2"]);
    let second_plan = std::fs::read(root.join("solve2/plan.json")).unwrap();
    assert_eq!(first_plan, second_plan, "reruns must be bit-identical");
}

#[test]
fn dynamic_solve_roundtrips_through_check_and_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("instance.json"), INSTANCE).unwrap();
    expect_success(
        root,
        &[
            "solve-dynamic",
            "--instance",
            "instance.json",
            "--horizon",
            "8",
            "--w1",
            "uniform",
            "-o",
            "dyn",
        ],
    );
    expect_success(
        root,
        &[
            "kkt-check",
            "--instance",
            "instance.json",
            "--plan",
            "dyn/plan.json",
            "--cert",
            "dyn/cert.json",
        ],
    );
    expect_success(
        root,
        &[
            "simulate",
            "--instance",
            "instance.json",
            "--policy",
            "dynam:plan=dyn/plan.json",
            "--steps",
            "8",
            "-o",
            "dynsim",
        ],
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("dynsim/summary.json")).unwrap())
            .unwrap();
    assert!(summary["total_revenue"].as_f64().unwrap() > 0.0);

    // The budgeted and soft supply variants solve and certify too.
    expect_success(
        root,
        &[
            "solve-dynamic",
            "--instance",
            "instance.json",
            "--horizon",
            "8",
            "--supply",
            "total=8",
            "-o",
            "dyn_total",
        ],
    );
    std::fs::write(root.join("tiers.json"), r#"{"tiers": [[0.5, 0.2]], "tail_marginal": 3.0}"#)
        .unwrap();
    expect_success(
        root,
        &[
            "solve-dynamic",
            "--instance",
            "instance.json",
            "--horizon",
            "8",
            "--supply",
            "soft=tiers.json",
            "-o",
            "dyn_soft",
        ],
    );
}

#[test]
fn invalid_instance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    // Not strongly connected: no way back from B.
    let broken = INSTANCE.replace(
        r#"{"id": "ba", "from": "B", "to": "A", "travel_time": 1, "cost": 0.0}"#,
        r#"{"id": "ba", "from": "A", "to": "B", "travel_time": 1, "cost": 0.0}"#,
    );
    std::fs::write(root.join("instance.json"), broken).unwrap();
    let out = run_in(root, &["solve-static", "--instance", "instance.json", "-o", "solve"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn corrupted_certificate_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("instance.json"), INSTANCE).unwrap();
    expect_success(root, &["solve-static", "--instance", "instance.json", "-o", "solve"]);
    let cert_text = std::fs::read_to_string(root.join("solve/cert.json")).unwrap();
    let mut cert: serde_json::Value = serde_json::from_str(&cert_text).unwrap();
    cert["lambda"][0] = serde_json::json!(5.0);
    std::fs::write(root.join("bad_cert.json"), serde_json::to_string(&cert).unwrap()).unwrap();
    let out = run_in(
        root,
        &[
            "kkt-check",
            "--instance",
            "instance.json",
            "--plan",
            "solve/plan.json",
            "--cert",
            "bad_cert.json",
        ],
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"), "report should say FAIL: {stdout}");
}

#[test]
fn missing_policy_option_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("instance.json"), INSTANCE).unwrap();
    let out = run_in(
        root,
        &["simulate", "--instance", "instance.json", "--policy", "fixed:beta=2", "-o", "sim"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sampled_simulation_is_seed_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("instance.json"), INSTANCE).unwrap();
    expect_success(root, &["solve-static", "--instance", "instance.json", "-o", "solve"]);
    for out in ["a", "b"] {
        expect_success(
            root,
            &[
                "simulate",
                "--instance",
                "instance.json",
                "--policy",
                "dynam:plan=solve/plan.json",
                "--sample-seed",
                "42",
                "--steps",
                "24",
                "-o",
                out,
            ],
        );
    }
    assert_eq!(
        std::fs::read(root.join("a/trace.csv")).unwrap(),
        std::fs::read(root.join("b/trace.csv")).unwrap()
    );
}
