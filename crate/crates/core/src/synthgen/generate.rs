use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{banded_normal, SynthConfig};
#[cfg(test)]
use super::config::AnomalyPlan;
use crate::dataset::{
    aggregate_all, apply_exclusions, build_feature_vectors, AwardRow, ContractRow, ExclusionRules, ExternalData,
    FeatureSource, GameRecord, PassStats, Position, PffRow, Predictor, PressureStats, ReleaseStats, RushStats, Sided,
    Samples, FIRST_PFF_SEASON,
};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::stats::normal_quantile;
use crate::valuation::Verdict;

/// Predictors an archetype may be defined on. The rest are derived from
/// these (experience, pick) or from the generated play counts.
pub const SYNTH_PREDICTORS: [Predictor; 14] = [
    Predictor::Age,
    Predictor::DraftRound,
    Predictor::ProBowls,
    Predictor::AllPro1st,
    Predictor::AllPro2nd,
    Predictor::PfwAllPro,
    Predictor::PffPriorAvg,
    Predictor::PffCurrent,
    Predictor::StuffPctDiff,
    Predictor::YdsPerAttemptDiff,
    Predictor::SuccessfulRunPctDiff,
    Predictor::PressurePct,
    Predictor::SackPct,
    Predictor::AttPerDropback,
];

const GAMES_PER_SEASON: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthArchetype {
    pub index: usize,
    pub size: usize,
    pub centroid: BTreeMap<String, f64>,
    /// Standard deviation of log salary above the floor implied by the
    /// configured noise; anomaly quantiles refer to this law.
    pub log_salary_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthMember {
    pub player_id: String,
    pub season_year: i32,
    pub archetype: usize,
    pub anomaly: Option<Verdict>,
    pub target_quantile: Option<f64>,
    pub cap_value_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub min_salary: f64,
    pub reference_year: i32,
    pub pricing: super::TruePricing,
    pub archetypes: Vec<TruthArchetype>,
    pub members: Vec<TruthMember>,
    /// Rookie-contract players added only to complete team lineups.
    pub fillers: Vec<String>,
}

impl Truth {
    pub fn anomalies(&self) -> impl Iterator<Item = &TruthMember> {
        self.members.iter().filter(|m| m.anomaly.is_some())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct League {
    pub games: Vec<GameRecord>,
    pub awards: Vec<AwardRow>,
    pub pff: Vec<PffRow>,
    pub contracts: Vec<ContractRow>,
    pub truth: Truth,
}

struct Slot {
    archetype: Option<usize>,
    quantile: Option<f64>,
    season: i32,
}

struct Player {
    id: String,
    season: i32,
    team: String,
    opponent: String,
    position: Position,
    archetype: Option<usize>,
    quantile: Option<f64>,
    targets: BTreeMap<Predictor, f64>,
}

fn population_value(p: Predictor, rng: &mut ChaCha8Rng) -> f64 {
    let n = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let count = |rng: &mut ChaCha8Rng, p1: f64, p2: f64| {
        let u: f64 = rng.random();
        if u < p2 {
            2.0
        } else if u < p1 + p2 {
            1.0
        } else {
            0.0
        }
    };
    match p {
        Predictor::Age => (28.0 + 3.0 * n(rng)).clamp(23.0, 37.0),
        Predictor::DraftRound => f64::from(rng.random_range(1..=8)),
        Predictor::ProBowls => count(rng, 0.12, 0.08),
        Predictor::AllPro1st | Predictor::AllPro2nd | Predictor::PfwAllPro => count(rng, 0.07, 0.0),
        Predictor::PffPriorAvg => 6.0 * n(rng),
        Predictor::PffCurrent => 8.0 * n(rng),
        Predictor::StuffPctDiff => 4.0 * n(rng),
        Predictor::YdsPerAttemptDiff => 0.6 * n(rng),
        Predictor::SuccessfulRunPctDiff => 5.0 * n(rng),
        Predictor::PressurePct => (0.6f64.ln() + 0.3 * n(rng)).exp(),
        Predictor::SackPct => (0.5f64.ln() + 0.4 * n(rng)).exp(),
        Predictor::AttPerDropback => rng.random_range(0.88..0.95),
        _ => unreachable!("not a generated predictor"),
    }
}

/// Spreads `total` over `games` as evenly as possible, extras first. Two
/// totals a <= b split this way stay ordered game by game.
fn split(total: i64, games: u32) -> Vec<i64> {
    let g = i64::from(games);
    let (base, extra) = (total.div_euclid(g), total.rem_euclid(g));
    (0..g).map(|i| base + i64::from(i < extra)).collect()
}

fn season_opener(season: i32) -> NaiveDate {
    let mut d = NaiveDate::from_ymd_opt(season, 9, 5).expect("valid date");
    while d.weekday() != Weekday::Sun {
        d += Duration::days(1);
    }
    d
}

fn games_for(p: &Player, draft: (u32, u32), rookie_year: i32, birthday: NaiveDate, rng: &mut ChaCha8Rng) -> Vec<GameRecord> {
    let t = |q: Predictor| p.targets[&q];
    let rate_count = |rate: f64, n: i64| (rate * n as f64).round().clamp(0.0, n as f64) as i64;

    let att_t = rng.random_range(130..=190i64);
    let att_n = rng.random_range(230..=300i64);
    let stuffs_n = rate_count(0.18, att_n);
    let stuffs_t = rate_count(0.18 + t(Predictor::StuffPctDiff) / 100.0, att_t);
    let yards_n = (4.2 * att_n as f64).round() as i64;
    let yards_t = ((4.2 + t(Predictor::YdsPerAttemptDiff)) * att_t as f64).round() as i64;
    let yac_n = (1.8 * att_n as f64).round() as i64;
    let yac_t = ((1.8 + 0.4 * t(Predictor::YdsPerAttemptDiff)) * att_t as f64).round() as i64;
    let succ_n = rate_count(0.45, att_n);
    let succ_t = rate_count(0.45 + t(Predictor::SuccessfulRunPctDiff) / 100.0, att_t);
    let td_n = rate_count(0.03, att_n);
    let td_t = rate_count(0.03 + 0.005 * (rng.random::<f64>() - 0.5), att_t);

    let press_n = rng.random_range(50..=90i64);
    let press_t = (t(Predictor::PressurePct) * press_n as f64).round().max(0.0) as i64;
    let sacks_n = rng.random_range(8..=16i64);
    let sacks_t = (t(Predictor::SackPct) * sacks_n as f64).round().max(0.0) as i64;
    let dropbacks = rng.random_range(520..=640i64);
    let attempts = rate_count(t(Predictor::AttPerDropback), dropbacks);
    let completions = rate_count(0.62, attempts);

    let g = GAMES_PER_SEASON;
    let cols: Vec<Vec<i64>> = [
        att_t, stuffs_t, yards_t, yac_t, succ_t, td_t, att_n, stuffs_n, yards_n, yac_n, succ_n, td_n, press_t, sacks_t,
        press_n, sacks_n, dropbacks, attempts, completions,
    ]
    .iter()
    .map(|&v| split(v, g))
    .collect();
    let opener = season_opener(p.season);
    (0..g as usize)
        .map(|i| {
            let c = |k: usize| cols[k][i];
            let u = |k: usize| c(k) as u32;
            GameRecord {
                game_id: format!("{}-W{:02}-{}", p.season, i + 1, p.team),
                date: opener + Duration::weeks(i as i64),
                playoff: false,
                player_id: p.id.clone(),
                team: p.team.clone(),
                opponent: p.opponent.clone(),
                position: p.position,
                rookie_year,
                draft_round: draft.0,
                draft_pick: draft.1,
                birthday,
                base_salary: 0.0,
                signing_bonus: 0.0,
                incentives: 0.0,
                cap_value: 0.0,
                snaps: rng.random_range(58..=72),
                holding_penalties_rush: u32::from(rng.random::<f64>() < 0.05),
                holding_penalties_pass: u32::from(rng.random::<f64>() < 0.05),
                rush: Sided {
                    to_side: RushStats {
                        attempts: u(0),
                        stuffs: u(1),
                        yards: c(2),
                        yards_after_contact: c(3),
                        successful: u(4),
                        touchdowns: u(5),
                    },
                    not_to_side: RushStats {
                        attempts: u(6),
                        stuffs: u(7),
                        yards: c(8),
                        yards_after_contact: c(9),
                        successful: u(10),
                        touchdowns: u(11),
                    },
                },
                pass: PassStats {
                    passing_yards: 7 * c(18),
                    dropbacks: u(16),
                    attempts: u(17),
                    completions: u(18),
                },
                protection: Sided {
                    to_side: PressureStats {
                        sacks: u(13),
                        sack_yards: 7 * c(13),
                        pressures: u(12),
                        hurries: u(12) / 2,
                        knockdowns: u(12) / 4,
                    },
                    not_to_side: PressureStats {
                        sacks: u(15),
                        sack_yards: 7 * c(15),
                        pressures: u(14),
                        hurries: u(14) / 2,
                        knockdowns: u(14) / 4,
                    },
                },
                release: ReleaseStats {
                    time: 2.4 + 0.4 * rng.random::<f64>(),
                    attempts: u(17),
                    time_under_pressure: 2.9,
                    attempts_under_pressure: (u(12) + u(14)).min(u(17)),
                },
            }
        })
        .collect()
}

/// Generates a league whose priced features cluster around the configured
/// archetypes and whose salaries follow the configured pricing function.
///
/// Every analysis player appears in a single season on a free-agent
/// contract. Rookie-contract fillers complete five-man lineups; the default
/// exclusions remove them from the analysis samples.
pub fn generate_league(cfg: &SynthConfig) -> Result<League> {
    cfg.validate()?;
    for name in cfg.pricing.coefficients.keys() {
        let p = Predictor::from_name(name).expect("validated");
        if !SYNTH_PREDICTORS.contains(&p) {
            return Err(Error::Config(format!("`{name}` cannot be generated directly")));
        }
    }
    let priced: Vec<Predictor> = cfg
        .pricing
        .coefficients
        .keys()
        .map(|k| Predictor::from_name(k).expect("validated"))
        .collect();
    let sizes = cfg.sizes();
    let seasons: Vec<i32> = (0..cfg.n_seasons as i32).map(|i| cfg.first_season + i).collect();

    let mut slots: Vec<Slot> = Vec::new();
    for (a, &size) in sizes.iter().enumerate() {
        let planned: Vec<f64> = cfg.anomalies.iter().filter(|p| p.archetype == a).map(|p| p.quantile).collect();
        if planned.len() > size {
            return Err(Error::Config(format!(
                "archetype {a} has {size} slots but {} planned anomalies",
                planned.len()
            )));
        }
        for i in 0..size {
            slots.push(Slot {
                archetype: Some(a),
                quantile: planned.get(i).copied(),
                season: 0,
            });
        }
    }
    let mut rng = stream(cfg.seed, "synth/assign");
    slots.shuffle(&mut rng);
    for (i, s) in slots.iter_mut().enumerate() {
        s.season = seasons[i % seasons.len()];
    }

    let mean_centroid: BTreeMap<Predictor, f64> = priced
        .iter()
        .map(|&p| {
            let v = cfg.archetypes.iter().map(|a| a.weight * a.centroid[p.key()]).sum();
            (p, v)
        })
        .collect();

    let mut players: Vec<Player> = Vec::new();
    let (mut n_members, mut n_fillers) = (0, 0);
    for &season in &seasons {
        let mut here: Vec<Slot> = slots
            .iter()
            .filter(|s| s.season == season)
            .map(|s| Slot {
                archetype: s.archetype,
                quantile: s.quantile,
                season,
            })
            .collect();
        let teams = here.len().div_ceil(5).max(2);
        while here.len() < teams * 5 {
            here.push(Slot {
                archetype: None,
                quantile: None,
                season,
            });
        }
        here.shuffle(&mut rng);
        for (i, slot) in here.into_iter().enumerate() {
            let team = i / 5;
            let id = match slot.archetype {
                Some(_) => {
                    n_members += 1;
                    format!("P{n_members:04}")
                }
                None => {
                    n_fillers += 1;
                    format!("F{n_fillers:04}")
                }
            };
            players.push(Player {
                id,
                season,
                team: format!("T{team:02}"),
                opponent: format!("T{:02}", (team + 1) % teams),
                position: Position::ALL[i % 5],
                archetype: slot.archetype,
                quantile: slot.quantile,
                targets: BTreeMap::new(),
            });
        }
    }

    let mut games = Vec::new();
    let mut awards = Vec::new();
    let mut pff = Vec::new();
    let mut contracts = Vec::new();
    for p in &mut players {
        let mut rng = stream(cfg.seed, &format!("synth/player/{}", p.id));
        for q in SYNTH_PREDICTORS {
            let v = match (p.archetype, priced.contains(&q)) {
                (Some(a), true) => {
                    let z = banded_normal(&mut rng, cfg.noise.band);
                    // Planted players sit close to their archetype's centre.
                    let shrink = if p.quantile.is_some() { 0.25 } else { 1.0 };
                    cfg.archetypes[a].centroid[q.key()] + shrink * cfg.noise.feature_scale * z * cfg.within_sd[q.key()]
                }
                (None, true) => mean_centroid[&q] + 2.0 * cfg.within_sd[q.key()] * banded_normal(&mut rng, None),
                (_, false) => population_value(q, &mut rng),
            };
            p.targets.insert(q, v);
        }

        let age = p.targets[&Predictor::Age];
        let experience = (age - 22.5 + banded_normal(&mut rng, Some(2.0))).round().clamp(1.0, 14.0) as i32;
        let rookie_year = p.season - experience;
        let round = p.targets[&Predictor::DraftRound].round().clamp(1.0, 8.0) as u32;
        let draft = if round >= 8 {
            (0, 0)
        } else {
            (round, (round - 1) * 32 + rng.random_range(1..=32))
        };
        let birthday = NaiveDate::from_ymd_opt(p.season, 9, 1).expect("valid date")
            - Duration::days((age * 365.25).round() as i64);

        let filler = p.archetype.is_none();
        let signing_year = if filler {
            (p.season - 1).max(2011)
        } else {
            rng.random_range((p.season - 2).max(2011)..=p.season)
        };
        contracts.push(ContractRow {
            player_id: p.id.clone(),
            signing_year,
            rookie_contract: filler,
            ufa: !filler,
            cap_value: 1.0,
        });

        let prior_seasons: Vec<i32> = (1..=experience).map(|k| p.season - k).collect();
        let counts = [
            Predictor::ProBowls,
            Predictor::AllPro1st,
            Predictor::AllPro2nd,
            Predictor::PfwAllPro,
        ]
        .map(|q| (p.targets[&q].round().max(0.0) as usize).min(prior_seasons.len()));
        for (k, &year) in prior_seasons.iter().enumerate() {
            let flags = counts.map(|c| k < c);
            if flags.iter().any(|&f| f) {
                awards.push(AwardRow {
                    player_id: p.id.clone(),
                    season_year: year,
                    pro_bowl: flags[0],
                    ap1: flags[1],
                    ap2: flags[2],
                    pfw: flags[3],
                });
            }
        }

        let target = p.targets[&Predictor::PffPriorAvg];
        let first = (signing_year - 3).max(FIRST_PFF_SEASON);
        let years: Vec<i32> = (first..signing_year).collect();
        let spread = rng.random_range(0.5..2.0);
        let offsets: Vec<f64> = match years.len() {
            3 => vec![-spread, 0.0, spread],
            2 => vec![-spread, spread],
            _ => vec![0.0; years.len()],
        };
        for (year, off) in years.iter().zip(offsets) {
            pff.push(PffRow {
                player_id: p.id.clone(),
                season_year: *year,
                rating: target + off,
            });
        }
        pff.push(PffRow {
            player_id: p.id.clone(),
            season_year: p.season,
            rating: p.targets[&Predictor::PffCurrent],
        });

        games.extend(games_for(p, draft, rookie_year, birthday, &mut rng));
    }

    // Salaries are set from the features the ingestion code derives, so the
    // pricing function holds exactly on what the analysis sees.
    let external = ExternalData {
        awards: awards.clone(),
        pff: pff.clone(),
        contracts: contracts.clone(),
        cap_table: cfg.cap_table.clone(),
        reference_year: cfg.reference_year,
    };
    let totals = aggregate_all(&games)?;
    let (vectors, _) = build_feature_vectors(&totals, &external)?;
    let samples = apply_exclusions(&vectors, &ExclusionRules::default());

    let log_sd: Vec<f64> = cfg
        .archetypes
        .iter()
        .map(|a| {
            let excess = cfg.pricing.evaluate(|k| a.centroid.get(k).copied())? - cfg.min_salary;
            if excess <= 0.0 {
                return Err(Error::Config("an archetype is priced at or below the salary floor".into()));
            }
            let feature_var: f64 = cfg
                .pricing
                .coefficients
                .iter()
                .map(|(k, alpha)| (alpha * cfg.within_sd[k] * cfg.noise.feature_scale / excess).powi(2))
                .sum();
            Ok((cfg.noise.salary_sigma.powi(2) + feature_var).sqrt())
        })
        .collect::<Result<_>>()?;

    let by_id: BTreeMap<&str, &Player> = players.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut adjusted: BTreeMap<String, f64> = BTreeMap::new();
    let mut members = Vec::new();
    for obs in &samples.regression {
        let p = by_id[obs.player_id.as_str()];
        let a = p.archetype.expect("fillers are excluded");
        let price = cfg.pricing.evaluate(|k| obs.feature(k))?;
        let excess = price - cfg.min_salary;
        if excess <= 0.0 {
            return Err(Error::Config(format!(
                "player {} is priced at {price:.0}, at or below the salary floor",
                p.id
            )));
        }
        let mut rng = stream(cfg.seed, &format!("synth/salary/{}", p.id));
        let salary = match p.quantile {
            Some(q) => cfg.min_salary + excess * (normal_quantile(q) * log_sd[a]).exp(),
            None if cfg.noise.salary_sigma == 0.0 => price,
            None => cfg.min_salary + excess * (cfg.noise.salary_sigma * banded_normal(&mut rng, cfg.noise.band)).exp(),
        };
        adjusted.insert(p.id.clone(), salary);
        members.push(TruthMember {
            player_id: p.id.clone(),
            season_year: p.season,
            archetype: a,
            anomaly: p.quantile.map(|q| if q > 0.5 { Verdict::Overvalued } else { Verdict::Undervalued }),
            target_quantile: p.quantile,
            cap_value_adjusted: salary,
        });
    }

    let ref_cap = cfg.cap_table[&cfg.reference_year];
    for c in &mut contracts {
        let adj = match adjusted.get(&c.player_id) {
            Some(&s) => s,
            None => {
                let mut rng = stream(cfg.seed, &format!("synth/salary/{}", c.player_id));
                cfg.min_salary + rng.random_range(1.0e5..1.0e6)
            }
        };
        c.cap_value = adj * cfg.cap_table[&c.signing_year] / ref_cap;
    }
    let nominal: BTreeMap<&str, f64> = contracts.iter().map(|c| (c.player_id.as_str(), c.cap_value)).collect();
    for g in &mut games {
        let cap = nominal[g.player_id.as_str()];
        g.cap_value = cap;
        g.base_salary = 0.75 * cap;
        g.signing_bonus = 0.2 * cap;
        g.incentives = 0.05 * cap;
    }

    members.sort_by(|a, b| a.player_id.cmp(&b.player_id));
    let truth = Truth {
        seed: cfg.seed,
        min_salary: cfg.min_salary,
        reference_year: cfg.reference_year,
        pricing: cfg.pricing.clone(),
        archetypes: cfg
            .archetypes
            .iter()
            .enumerate()
            .map(|(i, a)| TruthArchetype {
                index: i,
                size: sizes[i],
                centroid: a.centroid.clone(),
                log_salary_sd: log_sd[i],
            })
            .collect(),
        members,
        fillers: players.iter().filter(|p| p.archetype.is_none()).map(|p| p.id.clone()).collect(),
    };
    Ok(League {
        games,
        awards,
        pff,
        contracts,
        truth,
    })
}

impl League {
    /// Aggregates the generated games and applies the default exclusions,
    /// leaving the same samples a pipeline run analyses.
    pub fn samples(&self, cfg: &SynthConfig) -> Result<Samples> {
        let external = ExternalData {
            awards: self.awards.clone(),
            pff: self.pff.clone(),
            contracts: self.contracts.clone(),
            cap_table: cfg.cap_table.clone(),
            reference_year: cfg.reference_year,
        };
        let (vectors, _) = build_feature_vectors(&aggregate_all(&self.games)?, &external)?;
        Ok(apply_exclusions(&vectors, &ExclusionRules::default()))
    }
}
