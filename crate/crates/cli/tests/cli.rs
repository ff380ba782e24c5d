use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn jbstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jbstar")).args(args).env_remove("JBSTAR_SEED").output().unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("jbstar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn list_prints_every_suite() {
    let out = jbstar(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.contains("counterexample"));
}

#[test]
fn passing_suite_exits_zero_with_json() {
    let out = jbstar(&["counterexample", "--trials", "20", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "pass");
    assert_eq!(doc["schema"], 1);
    let checks = doc["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().any(|c| c["expected_fail"] == true));
}

#[test]
fn refused_theorem_grade_run_exits_one() {
    let alg = scratch("spin3.json", r#"{"kind":"spin","n":3}"#);
    let out = jbstar(&["linearity", "--trials", "5", "--algebra", alg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(jbstar(&["no-such-suite"]).status.code(), Some(2));
    assert_eq!(jbstar(&["axioms", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(jbstar(&["axioms", "--algebra", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(jbstar(&["axioms", "--abs-eps", "0.5"]).status.code(), Some(2));
    let bad = scratch("bad.json", r#"{"kind":"octonion"}"#);
    assert_eq!(jbstar(&["axioms", "--algebra", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_jbstar"))
        .args(["axioms", "--trials", "3", "--json"])
        .env("JBSTAR_SEED", "1234")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 1234);
    assert_eq!(json(&jbstar(&["axioms", "--trials", "3", "--json"]))["config"]["seed"], 42);
}

#[test]
fn out_file_matches_stdout_modulo_timing() {
    let dir = std::env::temp_dir().join(format!("jbstar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = jbstar(&["symmetric-difference", "--trials", "10", "--json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let mut a = json(&out);
    let mut b: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    a["duration_ms"] = Value::Null;
    b["duration_ms"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn descriptors_drive_the_preserver_suites() {
    let alg = scratch("h3.json", r#"{"kind":"hermitian_matrix","n":3}"#);
    let map = scratch(
        "map.json",
        r#"{"kind":"composition","outer":{"kind":"random_conjugation","seed":5},"inner":{"kind":"transpose"}}"#,
    );
    let out = jbstar(&["preserver", "--trials", "10", "--algebra", alg.to_str().unwrap(), "--map", map.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let sum = scratch(
        "sum.json",
        r#"{"kind":"direct_sum","parts":[{"kind":"hermitian_matrix","n":2},{"kind":"hermitian_matrix","n":3}]}"#,
    );
    let out = jbstar(&["structure-recovery", "--trials", "10", "--algebra", sum.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["checks"][0]["metrics"]["w_central_symmetry"], 1.0);
}

#[test]
fn exploratory_linearity_reports_the_counterexample_misfit() {
    let alg = scratch("spin3-x.json", r#"{"kind":"spin","n":3}"#);
    let map = scratch("cx.json", r#"{"kind":"spin_counterexample","epsilon":0.3}"#);
    let out = jbstar(&[
        "linearity",
        "--trials",
        "20",
        "--exploratory",
        "--json",
        "--algebra",
        alg.to_str().unwrap(),
        "--map",
        map.to_str().unwrap(),
    ]);
    let doc = json(&out);
    let misfit = doc["checks"][0]["metrics"]["misfit"].as_f64().unwrap();
    assert!(misfit >= 0.05, "misfit {misfit}");
    assert_eq!(out.status.code(), Some(1));
}
