//! End-to-end tests of the `riple` binary: artifact layout, output
//! determinism, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn riple(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riple"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_generate(dir: &Path) {
    let out = riple(&[
        "--out-dir",
        dir.to_str().unwrap(),
        "--users",
        "40",
        "--questions",
        "120",
        "--answers",
        "1500",
        "--topics-count",
        "5",
        "--seed",
        "11",
        "generate",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_writes_dataset_truth_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    small_generate(dir.path());
    for f in [
        "answers.csv",
        "ratings.csv",
        "tags.csv",
        "ground_truth.csv",
        "question_params.csv",
        "manifest.json",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn train_then_recommend_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    small_generate(dir.path());
    let run = dir.path().join("run");
    let out = riple(&[
        "--data-dir",
        dir.path().to_str().unwrap(),
        "--out-dir",
        run.to_str().unwrap(),
        "--seed",
        "11",
        "train",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run.join("model.json").exists());

    let rec = || {
        riple(&[
            "--data-dir",
            dir.path().to_str().unwrap(),
            "--seed",
            "11",
            "recommend",
            "--user",
            "u07",
            "--mode",
            "explore",
            "--top-n",
            "5",
        ])
    };
    let a = rec();
    let b = rec();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "recommendations must be byte-identical");
    let rows: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
    // explore must not return attempted questions
    for row in rows.as_array().unwrap() {
        assert_eq!(row["attempted"], false);
    }
}

#[test]
fn profile_reports_cold_start_flag() {
    let dir = tempfile::tempdir().unwrap();
    small_generate(dir.path());
    let out = riple(&[
        "--data-dir",
        dir.path().to_str().unwrap(),
        "profile",
        "--user",
        "u03",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["user_id"], "u03");
    assert!(v["cold_start"].is_boolean());
    assert_eq!(v["gaps"].as_object().unwrap().len(), 5);
}

#[test]
fn focus_without_topics_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    small_generate(dir.path());
    let out = riple(&[
        "--data-dir",
        dir.path().to_str().unwrap(),
        "recommend",
        "--user",
        "u00",
        "--mode",
        "focus",
    ]);
    assert_eq!(out.status.code(), Some(2), "usage errors exit with 2");
}

#[test]
fn unknown_user_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    small_generate(dir.path());
    let out = riple(&[
        "--data-dir",
        dir.path().to_str().unwrap(),
        "recommend",
        "--user",
        "nobody",
        "--mode",
        "explore",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nobody"));
}

#[test]
fn sweep_csv_has_the_contract_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = riple(&[
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--users",
        "40",
        "--questions",
        "120",
        "--answers",
        "1500",
        "--topics-count",
        "5",
        "--replicates",
        "2",
        "--folds",
        "3",
        "--seed",
        "11",
        "sweep",
        "--param",
        "beta",
        "--values",
        "0,0.1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("param_value,metric,group,mean,sd\n"));
    assert!(dir.path().join("sweep.json").exists());
}
