//! Synthetic leagues with planted salary archetypes and anomalies, written
//! in the same file layout the ingestion code reads.

mod config;
mod generate;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

pub use config::{default_cap_table, AnomalyPlan, Archetype, NoiseConfig, Preset, SynthConfig, TruePricing};
pub use generate::{generate_league, League, Truth, TruthArchetype, TruthMember, SYNTH_PREDICTORS};

use crate::dataset::{write_awards, write_contracts, write_game_records, write_pff};
use crate::error::{Error, Result};

pub const GAMES_FILE: &str = "games.csv";
pub const AWARDS_FILE: &str = "awards.csv";
pub const PFF_FILE: &str = "pff.csv";
pub const CONTRACTS_FILE: &str = "contracts.csv";
pub const TRUTH_FILE: &str = "truth.json";

/// Writes the four input tables and the ground truth into `dir`.
pub fn write_league(league: &League, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| -> Result<BufWriter<File>> {
        let path = dir.join(name);
        File::create(&path).map(BufWriter::new).map_err(|e| Error::io(path, e))
    };
    write_game_records(create(GAMES_FILE)?, &league.games)?;
    write_awards(create(AWARDS_FILE)?, &league.awards)?;
    write_pff(create(PFF_FILE)?, &league.pff)?;
    write_contracts(create(CONTRACTS_FILE)?, &league.contracts)?;
    let mut truth = serde_json::to_string_pretty(&league.truth)?;
    truth.push('\n');
    let path = dir.join(TRUTH_FILE);
    fs::write(&path, truth).map_err(|e| Error::io(path, e))?;
    Ok(())
}
