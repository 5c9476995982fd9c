use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::ClusterConfig;
use crate::dataset::{CapTable, ExclusionRules, Predictor, DEFAULT_CANDIDATES};
use crate::error::{Error, Result};
use crate::pricing::SelectionRule;
use crate::profiling::TestMode;
use crate::salary_dist::DistConfig;
use crate::synthgen::{default_cap_table, SynthConfig, AWARDS_FILE, CONTRACTS_FILE, GAMES_FILE, PFF_FILE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub games: PathBuf,
    pub awards: PathBuf,
    pub pff: PathBuf,
    pub contracts: PathBuf,
}

impl Default for InputPaths {
    fn default() -> Self {
        InputPaths {
            games: "games.csv".into(),
            awards: "awards.csv".into(),
            pff: "pff.csv".into(),
            contracts: "contracts.csv".into(),
        }
    }
}

impl InputPaths {
    pub fn all(&self) -> [(&'static str, &Path); 4] {
        [
            ("games", self.games.as_path()),
            ("awards", self.awards.as_path()),
            ("pff", self.pff.as_path()),
            ("contracts", self.contracts.as_path()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapConfig {
    /// Salaries are restated in this year's dollars.
    pub reference_year: i32,
    /// League salary cap by year. TOML keys are strings, so years are too.
    pub table: BTreeMap<String, f64>,
}

impl Default for CapConfig {
    fn default() -> Self {
        CapConfig {
            reference_year: 2015,
            table: default_cap_table().into_iter().map(|(y, v)| (y.to_string(), v)).collect(),
        }
    }
}

impl CapConfig {
    pub fn cap_table(&self) -> Result<CapTable> {
        self.table
            .iter()
            .map(|(y, &v)| {
                let year = y
                    .trim()
                    .parse::<i32>()
                    .map_err(|_| Error::Config(format!("cap table key `{y}` is not a year")))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!("cap for {year} must be positive")));
                }
                Ok((year, v))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingConfig {
    pub rule: SelectionRule,
    /// Stepwise candidate pool, by predictor key.
    pub candidates: Vec<String>,
    /// Re-run selection with neighbor metrics added to the pool.
    pub second_stage: bool,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            rule: SelectionRule::default(),
            candidates: DEFAULT_CANDIDATES.iter().map(|p| p.key().to_string()).collect(),
            second_stage: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub mode: TestMode,
    pub significance: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            mode: TestMode::TwoSample,
            significance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValuationConfig {
    pub alpha: f64,
    /// Rank places by which performance and salary must differ to
    /// corroborate a finding.
    pub rank_gap: usize,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        ValuationConfig {
            alpha: 0.05,
            rank_gap: 0,
        }
    }
}

/// Everything a run depends on. Relative input paths are resolved against
/// the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub inputs: InputPaths,
    pub cap: CapConfig,
    pub exclusions: ExclusionRules,
    pub pricing: PricingConfig,
    pub clustering: ClusterConfig,
    pub profiling: ProfileConfig,
    pub distribution: DistConfig,
    pub valuation: ValuationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out_dir: "out".into(),
            inputs: InputPaths::default(),
            cap: CapConfig::default(),
            exclusions: ExclusionRules::default(),
            pricing: PricingConfig::default(),
            clustering: ClusterConfig::default(),
            profiling: ProfileConfig::default(),
            distribution: DistConfig::default(),
            valuation: ValuationConfig::default(),
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates a config file, resolving relative paths against
    /// its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.inputs.games,
            &mut self.inputs.awards,
            &mut self.inputs.pff,
            &mut self.inputs.contracts,
            &mut self.out_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Run settings for a league written by `synthgen::write_league` into
    /// `dir`: its file names, cap table and salary floor.
    pub fn for_synthetic(dir: &Path, synth: &SynthConfig) -> Self {
        RunConfig {
            seed: synth.seed,
            out_dir: dir.join("out"),
            inputs: InputPaths {
                games: dir.join(GAMES_FILE),
                awards: dir.join(AWARDS_FILE),
                pff: dir.join(PFF_FILE),
                contracts: dir.join(CONTRACTS_FILE),
            },
            cap: CapConfig {
                reference_year: synth.reference_year,
                table: synth.cap_table.iter().map(|(y, v)| (y.to_string(), *v)).collect(),
            },
            // The synthetic leagues carry many unpriced nuisance columns;
            // AICc admits too many of them to keep the archetypes intact.
            pricing: PricingConfig {
                rule: SelectionRule::PValue { entry: 0.01, exit: 0.02 },
                ..PricingConfig::default()
            },
            distribution: DistConfig {
                lower_bound: Some(synth.min_salary),
                ..DistConfig::default()
            },
            ..RunConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        unit_interval("profiling.significance", self.profiling.significance)?;
        unit_interval("valuation.alpha", self.valuation.alpha)?;
        if let SelectionRule::PValue { entry, exit } = self.pricing.rule {
            unit_interval("pricing.rule.entry", entry)?;
            unit_interval("pricing.rule.exit", exit)?;
            if entry > exit {
                return Err(Error::Config("pricing entry threshold exceeds the exit threshold".into()));
            }
        }
        let c = &self.clustering;
        if !(c.rho > 0.0 && c.rho <= 1.0) {
            return Err(Error::Config(format!("clustering.rho must lie in (0, 1], got {}", c.rho)));
        }
        if c.k_max < 2 {
            return Err(Error::Config("clustering.k_max must be at least 2".into()));
        }
        if c.restarts == 0 {
            return Err(Error::Config("clustering.restarts must be positive".into()));
        }
        if c.k_override.is_some_and(|k| k < 2) {
            return Err(Error::Config("clustering.k_override must be at least 2".into()));
        }
        let d = &self.distribution;
        if d.lower_bound.is_some_and(|l| !(l.is_finite() && l >= 0.0)) {
            return Err(Error::Config("distribution.lower_bound must be non-negative".into()));
        }
        if !(d.beta_upper_factor > 1.0) {
            return Err(Error::Config("distribution.beta_upper_factor must exceed 1".into()));
        }
        if self.pricing.candidates.is_empty() {
            return Err(Error::Config("pricing.candidates is empty".into()));
        }
        for name in &self.pricing.candidates {
            if Predictor::from_name(name).is_none() {
                return Err(Error::UnknownPredictor(name.clone()));
            }
        }
        let table = self.cap.cap_table()?;
        if !table.contains_key(&self.cap.reference_year) {
            return Err(Error::MissingCapYear(self.cap.reference_year));
        }
        let paths = self.inputs.all();
        for (i, (a, pa)) in paths.iter().enumerate() {
            for (b, pb) in &paths[i + 1..] {
                if pa == pb {
                    return Err(Error::Config(format!("inputs.{a} and inputs.{b} name the same file")));
                }
            }
            if *pa == self.out_dir.as_path() {
                return Err(Error::Config(format!("inputs.{a} is the output directory")));
            }
        }
        Ok(())
    }

    /// SHA-256 of every field that affects results; the output directory
    /// is left out.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.out_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&semantic).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
