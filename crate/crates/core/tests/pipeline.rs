use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use lineval::error::Error;
use lineval::pipeline::{
    run_pipeline, run_stage, stage_dir, Manifest, RunConfig, Stage, FINDINGS_COLUMNS, MANIFEST_FILE,
    OVERVALUED_FILE, UNDERVALUED_FILE, VALIDATION_COLUMNS, VALIDATION_FILE,
};
use lineval::synthgen::{generate_league, write_league, League, SynthConfig};

fn scenario(dir: &Path, seed: u64) -> (League, RunConfig) {
    let synth = SynthConfig::separable(seed, 5).unwrap();
    let league = generate_league(&synth).unwrap();
    write_league(&league, dir).unwrap();
    (league, RunConfig::for_synthetic(dir, &synth))
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn header(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().split(',').map(str::to_string).collect()
}

#[test]
fn identify_before_fit_dist_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = scenario(dir.path(), 3);
    for stage in [Stage::Ingest, Stage::Price, Stage::Cluster, Stage::Profile] {
        run_stage(&cfg, stage).unwrap();
    }
    match run_stage(&cfg, Stage::Identify) {
        Err(Error::MissingStage { stage, required, missing }) => {
            assert_eq!(stage, "identify");
            assert_eq!(required, "fit-dist");
            assert!(missing.ends_with("fit-dist/state.json"));
        }
        other => panic!("expected a missing-stage error, got {other:?}"),
    }
    assert!(!stage_dir(&cfg.out_dir, Stage::Identify).exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mut cfg) = scenario(dir.path(), 4);
    cfg.out_dir = dir.path().join("a");
    run_pipeline(&cfg, None).unwrap();
    cfg.out_dir = dir.path().join("b");
    run_pipeline(&cfg, None).unwrap();
    let a = tree(&dir.path().join("a"));
    let b = tree(&dir.path().join("b"));
    assert!(a.len() > 20);
    assert_eq!(a, b);
}

#[test]
fn resuming_from_a_stage_reproduces_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = scenario(dir.path(), 5);
    run_pipeline(&cfg, None).unwrap();
    let before = tree(&cfg.out_dir);
    fs::remove_dir_all(stage_dir(&cfg.out_dir, Stage::Identify)).unwrap();
    fs::remove_dir_all(stage_dir(&cfg.out_dir, Stage::Validate)).unwrap();
    run_pipeline(&cfg, Some(Stage::Profile)).unwrap();
    assert_eq!(tree(&cfg.out_dir), before);
}

#[test]
fn findings_match_planted_anomalies() {
    let dir = tempfile::tempdir().unwrap();
    let (league, cfg) = scenario(dir.path(), 0);
    run_pipeline(&cfg, None).unwrap();
    let identify = stage_dir(&cfg.out_dir, Stage::Identify);
    let mut found = BTreeSet::new();
    for (file, verdict) in [(UNDERVALUED_FILE, "UNDERVALUED"), (OVERVALUED_FILE, "OVERVALUED")] {
        let mut rdr = csv::Reader::from_path(identify.join(file)).unwrap();
        for row in rdr.records() {
            let row = row.unwrap();
            assert_eq!(&row[8], "true");
            found.insert((row[0].to_string(), row[1].parse::<i32>().unwrap(), verdict.to_string()));
        }
    }
    let truth: BTreeSet<_> = league
        .truth
        .anomalies()
        .map(|m| (m.player_id.clone(), m.season_year, m.anomaly.unwrap().to_string()))
        .collect();
    assert_eq!(found, truth);
}

#[test]
fn report_headers() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = scenario(dir.path(), 6);
    run_pipeline(&cfg, None).unwrap();
    let identify = stage_dir(&cfg.out_dir, Stage::Identify);
    for file in [UNDERVALUED_FILE, OVERVALUED_FILE] {
        assert_eq!(header(&identify.join(file)), FINDINGS_COLUMNS);
    }
    let validate = stage_dir(&cfg.out_dir, Stage::Validate);
    assert_eq!(header(&validate.join(VALIDATION_FILE)), VALIDATION_COLUMNS);
}

#[test]
fn k_override_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mut cfg) = scenario(dir.path(), 7);
    cfg.clustering.k_override = Some(7);
    run_pipeline(&cfg, None).unwrap();
    let assignments = stage_dir(&cfg.out_dir, Stage::Cluster).join("assignments.csv");
    let mut rdr = csv::Reader::from_path(assignments).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "cluster").unwrap();
    let clusters: BTreeSet<String> = rdr.records().map(|r| r.unwrap()[col].to_string()).collect();
    assert_eq!(clusters.len(), 7);
}

#[test]
fn manifests_record_config_seed_and_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = scenario(dir.path(), 8);
    run_pipeline(&cfg, None).unwrap();
    for stage in Stage::ALL {
        let sd = stage_dir(&cfg.out_dir, stage);
        let m: Manifest = serde_json::from_slice(&fs::read(sd.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.stage, stage.name());
        assert_eq!(m.config_hash, cfg.hash());
        assert_eq!(m.seed, cfg.seed);
        assert!(m.outputs.contains_key("state.json"));
        for (name, digest) in &m.outputs {
            let bytes = fs::read(sd.join(name)).unwrap();
            assert_eq!(digest, &hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&bytes)));
        }
        let expected: Vec<String> = if stage == Stage::Ingest {
            vec!["awards".into(), "contracts".into(), "games".into(), "pff".into()]
        } else {
            stage.upstream().iter().map(|s| format!("{}/state.json", s.name())).collect()
        };
        let mut expected = expected;
        expected.sort();
        assert_eq!(m.inputs.keys().cloned().collect::<Vec<_>>(), expected);
    }
}
