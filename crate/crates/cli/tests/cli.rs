use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lineval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lineval")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = lineval(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, seed: &str) -> String {
    let d = dir.to_str().unwrap();
    ok(&["synth", "--preset", "separable", "--seed", seed, "--dir", d]);
    dir.join("run.toml").to_str().unwrap().to_string()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn synth_then_pipeline_finds_the_planted_players() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth(dir.path(), "0");
    assert!(dir.path().join("truth.json").is_file());
    ok(&["pipeline", "--config", &config]);
    let identify = dir.path().join("out/identify");
    let found = data_rows(&identify.join("undervalued.csv")) + data_rows(&identify.join("overvalued.csv"));
    assert_eq!(found, 10);
    assert!(dir.path().join("out/validate/validation.csv").is_file());
}

#[test]
fn identify_before_fit_dist_is_a_dependency_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth(dir.path(), "2");
    for stage in ["ingest", "price", "cluster", "profile"] {
        ok(&[stage, "--config", &config]);
    }
    let out = lineval(&["identify", "--config", &config]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error [dependency]"), "{stderr}");
    assert!(stderr.contains("lineval fit-dist"), "{stderr}");
}

#[test]
fn k_flag_overrides_the_cluster_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth(dir.path(), "3");
    ok(&["ingest", "--config", &config]);
    ok(&["price", "--config", &config]);
    ok(&["cluster", "--config", &config, "--k", "7"]);
    let summary = fs::read_to_string(dir.path().join("out/cluster/centroids.csv")).unwrap();
    assert_eq!(summary.lines().count() - 1, 7);
}

#[test]
fn out_and_stage_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth(dir.path(), "4");
    let other = dir.path().join("elsewhere");
    let other = other.to_str().unwrap();
    ok(&["pipeline", "--config", &config, "--out", other]);
    let before = fs::read(dir.path().join("elsewhere/identify/candidates.csv")).unwrap();
    fs::remove_dir_all(dir.path().join("elsewhere/identify")).unwrap();
    ok(&["pipeline", "--config", &config, "--out", other, "--stage-from", "identify"]);
    assert_eq!(fs::read(dir.path().join("elsewhere/identify/candidates.csv")).unwrap(), before);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "seed = 1\n[valuation]\nalpha = 2.0\n").unwrap();
    let out = lineval(&["pipeline", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error [config]"));
}

#[test]
fn missing_input_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth(dir.path(), "5");
    fs::remove_file(dir.path().join("games.csv")).unwrap();
    let out = lineval(&["ingest", "--config", &config]);
    assert_eq!(out.status.code(), Some(5));
}
