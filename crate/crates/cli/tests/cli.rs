use std::path::Path;
use std::process::{Command, Output};

fn eiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eiv-h2")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, r#"{"n_list": [7, 30], "repetitions": 2, "verify_samples": 10, "master_seed": 5}"#).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn truth_h2_prints_the_example_norm() {
    let o = eiv(&["truth-h2"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.690_677_313_121_406).abs() < 1e-12);
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().to_string_lossy().into_owned();
    let o = eiv(&["simulate", "--config", &cfg, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dataset = dir.path().join("dataset_N30.csv");
    assert!(dataset.exists());
    assert!(dir.path().join("dataset_N30.truth.json").exists());

    let o = eiv(&["analyze", dataset.to_str().unwrap(), "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("status: optimal"), "{text}");
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    let gamma = cert["gamma"].as_f64().unwrap();
    assert!(gamma >= 0.690_677_313_121_406 * (1.0 - 1e-6));
    assert!(dir.path().join("verification.json").exists());
}

#[test]
fn montecarlo_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut summaries = Vec::new();
    for (k, jobs) in ["1", "2"].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let o = eiv(&["montecarlo", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("records.csv").exists());
        summaries.push(std::fs::read(out.join("summary.csv")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn unknown_g_choice_is_rejected() {
    let o = eiv(&["montecarlo", "--g", "pseudo"]);
    assert!(!o.status.success());
}
