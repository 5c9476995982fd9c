use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::cap::{adjust_cap_inflation, CapTable};
use super::features::{Awards, ContractInfo, Demographics, PffHistory, Salary, SeasonFeatureVector};
use super::games::read_table;
use super::season::{compute_differentials, SeasonTotals};
use crate::error::{Error, Result};

/// Draft round and pick assigned to undrafted players.
pub const UNDRAFTED_ROUND: u32 = 8;
pub const UNDRAFTED_PICK: u32 = 260;

/// Earliest season with PFF grades.
pub const FIRST_PFF_SEASON: i32 = 2007;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwardRow {
    pub player_id: String,
    pub season_year: i32,
    pub pro_bowl: bool,
    pub ap1: bool,
    pub ap2: bool,
    pub pfw: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PffRow {
    pub player_id: String,
    pub season_year: i32,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractRow {
    pub player_id: String,
    pub signing_year: i32,
    pub rookie_contract: bool,
    pub ufa: bool,
    /// Annual cap charge in signing-year dollars.
    pub cap_value: f64,
}

const AWARD_COLUMNS: [&str; 6] = ["player_id", "season_year", "pro_bowl", "ap1", "ap2", "pfw"];
const PFF_COLUMNS: [&str; 3] = ["player_id", "season_year", "rating"];
const CONTRACT_COLUMNS: [&str; 5] = ["player_id", "signing_year", "rookie_contract", "ufa", "cap_value"];

fn check_unique<'a>(file: &str, keys: impl Iterator<Item = (&'a str, i32)>) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for (player, year) in keys {
        if !seen.insert((player, year)) {
            return Err(Error::DuplicateKey {
                file: file.to_string(),
                key: format!("({player}, {year})"),
            });
        }
    }
    Ok(())
}

pub fn read_awards<R: Read>(reader: R, file: &str) -> Result<Vec<AwardRow>> {
    let rows = read_table(reader, file, &AWARD_COLUMNS, |r| {
        Ok(AwardRow {
            player_id: r.text("player_id")?,
            season_year: r.parse("season_year")?,
            pro_bowl: r.flag("pro_bowl")?,
            ap1: r.flag("ap1")?,
            ap2: r.flag("ap2")?,
            pfw: r.flag("pfw")?,
        })
    })?;
    check_unique(file, rows.iter().map(|a| (a.player_id.as_str(), a.season_year)))?;
    Ok(rows)
}

pub fn read_pff<R: Read>(reader: R, file: &str) -> Result<Vec<PffRow>> {
    let rows = read_table(reader, file, &PFF_COLUMNS, |r| {
        Ok(PffRow {
            player_id: r.text("player_id")?,
            season_year: r.parse("season_year")?,
            rating: r.amount("rating")?,
        })
    })?;
    check_unique(file, rows.iter().map(|p| (p.player_id.as_str(), p.season_year)))?;
    Ok(rows)
}

pub fn read_contracts<R: Read>(reader: R, file: &str) -> Result<Vec<ContractRow>> {
    let rows = read_table(reader, file, &CONTRACT_COLUMNS, |r| {
        let cap_value = r.amount("cap_value")?;
        if cap_value <= 0.0 {
            return Err(r.error("cap_value", "cap value must be positive"));
        }
        Ok(ContractRow {
            player_id: r.text("player_id")?,
            signing_year: r.parse("signing_year")?,
            rookie_contract: r.flag("rookie_contract")?,
            ufa: r.flag("ufa")?,
            cap_value,
        })
    })?;
    check_unique(file, rows.iter().map(|c| (c.player_id.as_str(), c.signing_year)))?;
    Ok(rows)
}

fn write_rows<W: Write>(writer: W, file: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::io(file, e))
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

pub fn write_awards<W: Write>(writer: W, rows: &[AwardRow]) -> Result<()> {
    write_rows(
        writer,
        "awards.csv",
        &AWARD_COLUMNS,
        rows.iter().map(|a| {
            vec![
                a.player_id.clone(),
                a.season_year.to_string(),
                flag(a.pro_bowl),
                flag(a.ap1),
                flag(a.ap2),
                flag(a.pfw),
            ]
        }),
    )
}

pub fn write_pff<W: Write>(writer: W, rows: &[PffRow]) -> Result<()> {
    write_rows(
        writer,
        "pff.csv",
        &PFF_COLUMNS,
        rows.iter()
            .map(|p| vec![p.player_id.clone(), p.season_year.to_string(), p.rating.to_string()]),
    )
}

pub fn write_contracts<W: Write>(writer: W, rows: &[ContractRow]) -> Result<()> {
    write_rows(
        writer,
        "contracts.csv",
        &CONTRACT_COLUMNS,
        rows.iter().map(|c| {
            vec![
                c.player_id.clone(),
                c.signing_year.to_string(),
                flag(c.rookie_contract),
                flag(c.ufa),
                c.cap_value.to_string(),
            ]
        }),
    )
}

/// Everything merged onto the game-derived season totals.
#[derive(Debug, Clone, Default)]
pub struct ExternalData {
    pub awards: Vec<AwardRow>,
    pub pff: Vec<PffRow>,
    pub contracts: Vec<ContractRow>,
    pub cap_table: CapTable,
    pub reference_year: i32,
}

/// What the merge could not attach.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    /// Player-seasons with no contract signed on or before the season.
    pub no_contract: Vec<(String, i32)>,
    pub missing_pff_prior: Vec<(String, i32)>,
    pub missing_pff_current: Vec<(String, i32)>,
    pub flagged_differentials: Vec<(String, i32)>,
}

/// Age in years on September 1 of the season.
fn age_at_season_start(birthday: NaiveDate, season_year: i32) -> f64 {
    let start = NaiveDate::from_ymd_opt(season_year, 9, 1).expect("valid date");
    (start - birthday).num_days() as f64 / 365.25
}

/// Joins season totals with awards, PFF grades and contracts.
///
/// A season is priced under the most recent contract signed in or before
/// that season. Award counts include only selections earned in seasons
/// before the observed one.
pub fn build_feature_vectors(
    totals: &[SeasonTotals],
    external: &ExternalData,
) -> Result<(Vec<SeasonFeatureVector>, MergeReport)> {
    check_unique("awards", external.awards.iter().map(|a| (a.player_id.as_str(), a.season_year)))?;
    check_unique("pff", external.pff.iter().map(|p| (p.player_id.as_str(), p.season_year)))?;
    check_unique(
        "contracts",
        external.contracts.iter().map(|c| (c.player_id.as_str(), c.signing_year)),
    )?;

    let mut awards: BTreeMap<&str, Vec<&AwardRow>> = BTreeMap::new();
    for a in &external.awards {
        awards.entry(a.player_id.as_str()).or_default().push(a);
    }
    let mut pff: BTreeMap<&str, BTreeMap<i32, f64>> = BTreeMap::new();
    for p in &external.pff {
        pff.entry(p.player_id.as_str()).or_default().insert(p.season_year, p.rating);
    }
    let mut contracts: BTreeMap<&str, BTreeMap<i32, &ContractRow>> = BTreeMap::new();
    for c in &external.contracts {
        contracts.entry(c.player_id.as_str()).or_default().insert(c.signing_year, c);
    }

    let mut out = Vec::with_capacity(totals.len());
    let mut report = MergeReport::default();
    for t in totals {
        let key = (t.player_id.clone(), t.season_year);
        let Some(contract) = contracts
            .get(t.player_id.as_str())
            .and_then(|m| m.range(..=t.season_year).next_back())
            .map(|(_, c)| *c)
        else {
            report.no_contract.push(key);
            continue;
        };

        let mut award_counts = Awards::default();
        for a in awards.get(t.player_id.as_str()).into_iter().flatten() {
            if a.season_year < t.season_year {
                award_counts.pro_bowls += f64::from(u8::from(a.pro_bowl));
                award_counts.ap_all_pro_1st += f64::from(u8::from(a.ap1));
                award_counts.ap_all_pro_2nd += f64::from(u8::from(a.ap2));
                award_counts.pfw_all_pro += f64::from(u8::from(a.pfw));
            }
        }

        let ratings = pff.get(t.player_id.as_str());
        let prior: Vec<f64> = ratings
            .map(|m| m.range(..contract.signing_year).map(|(_, r)| *r).collect())
            .unwrap_or_default();
        let current = ratings.and_then(|m| m.get(&t.season_year)).copied();
        let history = PffHistory {
            avg_rating_prior_to_contract: if prior.is_empty() {
                0.0
            } else {
                prior.iter().sum::<f64>() / prior.len() as f64
            },
            rating_current_season: current.unwrap_or(0.0),
            prior_missing: prior.is_empty(),
            current_missing: current.is_none(),
        };
        if history.prior_missing {
            report.missing_pff_prior.push(key.clone());
        }
        if history.current_missing {
            report.missing_pff_current.push(key.clone());
        }

        let (differentials, differential_flags) = compute_differentials(t);
        if differential_flags.any() {
            report.flagged_differentials.push(key.clone());
        }

        let adjusted = adjust_cap_inflation(
            contract.cap_value,
            contract.signing_year,
            &external.cap_table,
            external.reference_year,
        )?;

        let drafted = t.draft_round > 0 && t.draft_pick > 0;
        out.push(SeasonFeatureVector {
            player_id: t.player_id.clone(),
            season_year: t.season_year,
            team: t.team.clone(),
            position: t.position,
            snaps: t.snaps,
            demographics: Demographics {
                age: age_at_season_start(t.birthday, t.season_year),
                experience: f64::from((t.season_year - t.rookie_year).max(0)),
                draft_round: f64::from(if drafted { t.draft_round } else { UNDRAFTED_ROUND }),
                draft_pick: f64::from(if drafted { t.draft_pick } else { UNDRAFTED_PICK }),
            },
            awards: award_counts,
            pff: history,
            differentials,
            differential_flags,
            salary: Salary {
                cap_value_nominal: contract.cap_value,
                cap_value_adjusted: adjusted,
            },
            contract: ContractInfo {
                signing_year: contract.signing_year,
                rookie_contract: contract.rookie_contract,
                unrestricted_fa_at_signing: contract.ufa,
            },
        });
    }
    Ok((out, report))
}
