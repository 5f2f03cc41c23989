use std::path::Path;
use std::process::Command;

use alforge_core::benchmark::BlobBenchmark;
use alforge_core::oracle::FusionStrategy;
use alforge_core::{RunConfig, Session};

fn alforge(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_alforge")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let config = BlobBenchmark {
        per_blob: 50,
        knn_k: 3,
        budget: 12,
        ..BlobBenchmark::default()
    }
    .config(5);
    let path = dir.join("run.json");
    std::fs::write(&path, config.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let csv = dir.path().join("history.csv");
    let saved = dir.path().join("session.json");
    let out = alforge(&[
        "run",
        "--config",
        &config,
        "--out",
        csv.to_str().unwrap(),
        "--session-out",
        saved.to_str().unwrap(),
        "--schedule",
        "us,qbc",
        "--switch-at",
        "6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let history = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(history.lines().count(), 1 + 13);

    let session = Session::load(&saved).unwrap();
    assert_eq!(session.queries_made(), 12);
    assert_eq!(session.switch_points(), &[6]);
    assert_eq!(session.history_csv(), history);

    let replayed = dir.path().join("replayed.csv");
    let out = alforge(&["replay", "--session", saved.to_str().unwrap(), "--out", replayed.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&replayed).unwrap(), history);
}

#[test]
fn run_to_stdout_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let a = alforge(&["run", "--config", &config]);
    let b = alforge(&["run", "--config", &config]);
    assert!(a.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = alforge(&["run", "--config", &config, "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_prints_overridden_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = alforge(&["config", "--config", &config, "--budget", "7", "--fusion", "conservative"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed = RunConfig::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(parsed.policy.budget, 7);
    assert_eq!(parsed.fusion, FusionStrategy::Conservative);
}

#[test]
fn bad_overrides_fail() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    assert!(!alforge(&["run", "--config", &config, "--strategy", "nope"]).status.success());
    assert!(!alforge(&["run", "--config", &config, "--snapshot-every", "0"]).status.success());
    assert!(!alforge(&["run", "--config", "/nonexistent/run.json"]).status.success());
}
