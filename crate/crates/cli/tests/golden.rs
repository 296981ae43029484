//! Golden tests: the shipped fixture commands must reproduce byte-identical
//! structured reports under the default configuration and pinned seed.

use std::path::PathBuf;
use std::process::{Command, Output};

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

fn run(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cohjump"));
    // shield the run from ambient COHJUMP_* overrides
    for (key, _) in std::env::vars() {
        if key.starts_with("COHJUMP_") {
            cmd.env_remove(key);
        }
    }
    cmd.current_dir(workspace_root())
        .args(args)
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("cannot read {path:?}: {e}"))
}

fn assert_matches_golden(output: &Output, name: &str, want_code: i32) {
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(
        stdout,
        golden(name),
        "structured output differs from {name}"
    );
    assert_eq!(
        output.status.code(),
        Some(want_code),
        "exit code for {name}; stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn toy_jump_verdict_degree_zero_is_byte_identical() {
    let output = run(&[
        "jump-verdict",
        "fixtures/toy.json",
        "--degree",
        "0",
        "--order",
        "3",
        "--format",
        "structured",
    ]);
    assert_matches_golden(&output, "toy_verdict_q0.json", 2);
}

#[test]
fn trivial_jump_verdict_degree_one_is_byte_identical() {
    let output = run(&[
        "jump-verdict",
        "fixtures/trivial.json",
        "--degree",
        "1",
        "--order",
        "3",
        "--format",
        "structured",
    ]);
    assert_matches_golden(&output, "trivial_verdict_q1.json", 0);
}

#[test]
fn toy_oracle_compare_degree_zero_is_byte_identical() {
    let output = run(&[
        "oracle-compare",
        "fixtures/toy.json",
        "--degree",
        "0",
        "--format",
        "structured",
    ]);
    assert_matches_golden(&output, "toy_oracle_q0.json", 0);
}

#[test]
fn structured_reports_round_trip_through_parse_and_emit() {
    for name in [
        "toy_verdict_q0.json",
        "trivial_verdict_q1.json",
        "toy_oracle_q0.json",
    ] {
        let text = golden(name);
        let value: serde_json::Value = serde_json::from_str(&text).expect("valid json");
        assert_eq!(value["format_version"], 1, "{name}");
    }
}

#[test]
fn usage_error_exits_one() {
    let output = run(&[
        "jump-verdict",
        "fixtures/does_not_exist.json",
        "--degree",
        "0",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(!output.stderr.is_empty());
}

#[test]
fn show_config_prints_defaults() {
    let output = run(&["--show-config"]);
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8_lossy(&output.stdout);
    let value: serde_json::Value = serde_json::from_str(&text).expect("valid json");
    assert_eq!(value["default_order"], 6);
    assert_eq!(value["oracle_samples"], 8);
}

#[test]
fn flag_overrides_reach_the_report_provenance() {
    let output = run(&[
        "jump-verdict",
        "fixtures/toy.json",
        "--degree",
        "0",
        "--order",
        "3",
        "--format",
        "structured",
        "--rank-tol",
        "1e-12",
    ]);
    let value: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).expect("valid json");
    assert_eq!(value["config"]["rank_tol"], 1e-12);
}

#[test]
fn config_file_overrides_reach_the_report_provenance() {
    let dir = std::env::temp_dir().join("cohjump-golden-config");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("config.json");
    std::fs::write(&path, r#"{ "oracle_samples": 5, "obstruction_tol": 1e-7 }"#).unwrap();
    let output = run(&[
        "oracle-compare",
        "fixtures/toy.json",
        "--degree",
        "0",
        "--format",
        "structured",
        "--config",
        path.to_str().unwrap(),
    ]);
    let value: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).expect("valid json");
    assert_eq!(value["config"]["oracle_samples"], 5);
    assert_eq!(value["config"]["obstruction_tol"], 1e-7);
    assert_eq!(value["result"]["samples"].as_array().unwrap().len(), 5);
}

#[test]
fn env_overrides_reach_the_report_provenance() {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cohjump"));
    let output = cmd
        .current_dir(workspace_root())
        .env("COHJUMP_ORACLE_SAMPLES", "12")
        .args([
            "oracle-compare",
            "fixtures/toy.json",
            "--degree",
            "0",
            "--format",
            "structured",
        ])
        .output()
        .expect("binary runs");
    let value: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).expect("valid json");
    assert_eq!(value["config"]["oracle_samples"], 12);
    assert_eq!(value["result"]["samples"].as_array().unwrap().len(), 12);
}

#[test]
fn build_spec_file_reproduces_the_preset_model() {
    let dir = std::env::temp_dir().join("cohjump-golden-spec");
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("iwasawa_from_spec.json");
    let output = run(&[
        "models",
        "build",
        "fixtures/specs/iwasawa_tangent.json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let built = std::fs::read_to_string(&out).unwrap();
    let shipped =
        std::fs::read_to_string(workspace_root().join("fixtures/iwasawa_tangent.json")).unwrap();
    assert_eq!(built, shipped);
}

#[test]
fn models_build_reproduces_shipped_fixtures() {
    let dir = std::env::temp_dir().join("cohjump-golden-build");
    std::fs::create_dir_all(&dir).unwrap();
    for (preset, shipped) in [
        ("toy", "fixtures/toy.json"),
        ("trivial", "fixtures/trivial.json"),
        ("order-two", "fixtures/order_two.json"),
        ("iwasawa-tangent", "fixtures/iwasawa_tangent.json"),
        ("iwasawa-tangent-dgla", "fixtures/iwasawa_tangent_dgla.json"),
        ("iwasawa-cotangent", "fixtures/iwasawa_cotangent.json"),
        ("kodaira-tangent", "fixtures/kodaira_tangent.json"),
    ] {
        let out = dir.join(format!("{preset}.json"));
        let output = run(&["models", "build", preset, "--out", out.to_str().unwrap()]);
        assert_eq!(output.status.code(), Some(0), "{preset}");
        let built = std::fs::read_to_string(&out).unwrap();
        let shipped_text = std::fs::read_to_string(workspace_root().join(shipped)).unwrap();
        assert_eq!(built, shipped_text, "{preset} fixture drifted from builder");
    }
}
