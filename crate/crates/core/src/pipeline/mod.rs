//! Staged batch runs. Every stage reads its upstream states from the output
//! directory, then writes its reports, a `state.json` for downstream stages
//! and a `manifest.json` recording what it was computed from.

mod config;
mod reports;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{CapConfig, InputPaths, PricingConfig, ProfileConfig, RunConfig, ValuationConfig};
pub use reports::{FINDINGS_COLUMNS, OVERVALUED_FILE, UNDERVALUED_FILE, VALIDATION_COLUMNS, VALIDATION_FILE};
pub use stages::{
    cluster, fit_distributions, identify_anomalies, ingest, price, profile, validate, ClusterState, FitState,
    IdentifyState, IngestState, PriceState, ProfileState, ValidateState,
};

use crate::error::{Error, Result};

pub const STATE_FILE: &str = "state.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Price,
    Cluster,
    Profile,
    FitDist,
    Identify,
    Validate,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Price,
        Stage::Cluster,
        Stage::Profile,
        Stage::FitDist,
        Stage::Identify,
        Stage::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Price => "price",
            Stage::Cluster => "cluster",
            Stage::Profile => "profile",
            Stage::FitDist => "fit-dist",
            Stage::Identify => "identify",
            Stage::Validate => "validate",
        }
    }

    /// Stages whose state this one reads.
    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Price => &[Stage::Ingest],
            Stage::Cluster => &[Stage::Ingest, Stage::Price],
            Stage::Profile => &[Stage::Price, Stage::Cluster],
            Stage::FitDist => &[Stage::Ingest, Stage::Cluster],
            Stage::Identify => &[Stage::Ingest, Stage::Cluster, Stage::Profile, Stage::FitDist],
            Stage::Validate => &[Stage::Ingest, Stage::Identify],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s || st.name().replace('-', "_") == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    /// SHA-256 of every file read, keyed by role.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every file written, keyed by name within the stage directory.
    pub outputs: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn stage_dir(out: &Path, stage: Stage) -> PathBuf {
    out.join(stage.name())
}

fn state_path(out: &Path, stage: Stage) -> PathBuf {
    stage_dir(out, stage).join(STATE_FILE)
}

/// Loads the state `stage` needs from `required`.
pub fn load_state<T: DeserializeOwned>(out: &Path, stage: Stage, required: Stage) -> Result<T> {
    let path = state_path(out, required);
    if !path.is_file() {
        return Err(Error::MissingStage {
            stage: stage.name().into(),
            required: required.name().into(),
            missing: path,
        });
    }
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Collects a stage's files before writing them all at once.
pub(crate) struct StageOutput {
    files: BTreeMap<String, Vec<u8>>,
}

impl StageOutput {
    fn new<T: Serialize>(state: &T) -> Result<Self> {
        let mut files = BTreeMap::new();
        files.insert(STATE_FILE.to_string(), serde_json::to_vec(state)?);
        Ok(StageOutput { files })
    }

    pub(crate) fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub(crate) fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }
}

fn write_stage(cfg: &RunConfig, stage: Stage, inputs: BTreeMap<String, String>, output: StageOutput) -> Result<()> {
    let dir = stage_dir(&cfg.out_dir, stage);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut outputs = BTreeMap::new();
    for (name, bytes) in &output.files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        outputs.insert(name.clone(), hex::encode(Sha256::digest(bytes)));
    }
    let manifest = Manifest {
        stage: stage.name().into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        inputs,
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
}

fn upstream_hashes(out: &Path, stage: Stage) -> Result<BTreeMap<String, String>> {
    stage
        .upstream()
        .iter()
        .map(|&s| {
            let path = state_path(out, s);
            if !path.is_file() {
                return Err(Error::MissingStage {
                    stage: stage.name().into(),
                    required: s.name().into(),
                    missing: path,
                });
            }
            Ok((format!("{}/{STATE_FILE}", s.name()), sha256_file(&path)?))
        })
        .collect()
}

/// Runs one stage against the states already in `cfg.out_dir`.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<()> {
    let out = cfg.out_dir.as_path();
    let inputs = match stage {
        Stage::Ingest => cfg
            .inputs
            .all()
            .iter()
            .map(|(role, path)| Ok((role.to_string(), sha256_file(path)?)))
            .collect::<Result<_>>()?,
        _ => upstream_hashes(out, stage)?,
    };
    let output = match stage {
        Stage::Ingest => reports::ingest(&ingest(cfg)?)?,
        Stage::Price => {
            let i: IngestState = load_state(out, stage, Stage::Ingest)?;
            reports::price(&price(cfg, &i)?)?
        }
        Stage::Cluster => {
            let i: IngestState = load_state(out, stage, Stage::Ingest)?;
            let p: PriceState = load_state(out, stage, Stage::Price)?;
            reports::cluster(&cluster(cfg, &i, &p)?)?
        }
        Stage::Profile => {
            let p: PriceState = load_state(out, stage, Stage::Price)?;
            let c: ClusterState = load_state(out, stage, Stage::Cluster)?;
            reports::profile(&profile(cfg, &p, &c)?)?
        }
        Stage::FitDist => {
            let i: IngestState = load_state(out, stage, Stage::Ingest)?;
            let c: ClusterState = load_state(out, stage, Stage::Cluster)?;
            reports::fit_dist(&fit_distributions(cfg, &i, &c)?)?
        }
        Stage::Identify => {
            let i: IngestState = load_state(out, stage, Stage::Ingest)?;
            let c: ClusterState = load_state(out, stage, Stage::Cluster)?;
            let p: ProfileState = load_state(out, stage, Stage::Profile)?;
            let f: FitState = load_state(out, stage, Stage::FitDist)?;
            reports::identify(&identify_anomalies(cfg, &i, &c, &p, &f)?)?
        }
        Stage::Validate => {
            let i: IngestState = load_state(out, stage, Stage::Ingest)?;
            let f: IdentifyState = load_state(out, stage, Stage::Identify)?;
            reports::validate(&validate(cfg, &i, &f)?)?
        }
    };
    write_stage(cfg, stage, inputs, output)
}

/// Runs every stage in order, starting at `from` when given.
pub fn run_pipeline(cfg: &RunConfig, from: Option<Stage>) -> Result<()> {
    for stage in Stage::ALL.into_iter().filter(|&s| from.is_none_or(|f| s >= f)) {
        run_stage(cfg, stage)?;
    }
    Ok(())
}

/// All states of one run, computed in memory without touching the output
/// directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub ingest: IngestState,
    pub price: PriceState,
    pub cluster: ClusterState,
    pub profile: ProfileState,
    pub fits: FitState,
    pub identify: IdentifyState,
    pub validate: ValidateState,
}

pub fn run_in_memory(cfg: &RunConfig) -> Result<RunResult> {
    let i = ingest(cfg)?;
    let p = price(cfg, &i)?;
    let c = cluster(cfg, &i, &p)?;
    let pr = profile(cfg, &p, &c)?;
    let f = fit_distributions(cfg, &i, &c)?;
    let id = identify_anomalies(cfg, &i, &c, &pr, &f)?;
    let v = validate(cfg, &i, &id)?;
    Ok(RunResult {
        ingest: i,
        price: p,
        cluster: c,
        profile: pr,
        fits: f,
        identify: id,
        validate: v,
    })
}
