use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ols::PricingModel;
use crate::dataset::{Category, FeatureSource, Position, Predictor};
use crate::error::{Error, Result};

pub const TEAM_PERFORMANCE: &str = "team_performance";
pub const TEAM_EXPERIENCE: &str = "team_experience";
pub const TEAM_PERFORMANCE_SQ: &str = "team_performance_sq";
pub const TEAM_EXPERIENCE_SQ: &str = "team_experience_sq";

/// Assigns every model predictor to the experience or performance set.
pub fn partition_predictors(model: &PricingModel) -> Result<BTreeMap<String, Category>> {
    model
        .terms
        .iter()
        .map(|t| {
            Predictor::from_name(&t.name)
                .map(|p| (t.name.clone(), p.category()))
                .ok_or_else(|| Error::UnknownPredictor(t.name.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    pub partition: BTreeMap<String, Category>,
    pub gamma: BTreeMap<String, f64>,
}

impl MetricWeights {
    /// Weighted sum of one set's predictors.
    pub fn metric(&self, category: Category, source: &impl FeatureSource) -> Result<f64> {
        let mut total = 0.0;
        for (name, &c) in &self.partition {
            if c == category {
                let x = source
                    .feature(name)
                    .ok_or_else(|| Error::MissingPredictor(name.clone()))?;
                total += self.gamma[name] * x;
            }
        }
        Ok(total)
    }
}

/// Divides each coefficient by the signed sum of its set's coefficients.
pub fn normalized_weights(model: &PricingModel, partition: &BTreeMap<String, Category>) -> Result<MetricWeights> {
    let mut gamma = BTreeMap::new();
    for (category, label) in [(Category::Experience, "experience"), (Category::Performance, "performance")] {
        let members: Vec<(&str, f64)> = model
            .terms
            .iter()
            .filter(|t| partition.get(&t.name) == Some(&category))
            .map(|t| (t.name.as_str(), t.coefficient))
            .collect();
        if members.is_empty() {
            continue;
        }
        let sum: f64 = members.iter().map(|(_, a)| a).sum();
        let magnitude: f64 = members.iter().map(|(_, a)| a.abs()).sum();
        if sum.abs() <= 1e-12 * magnitude {
            return Err(Error::ZeroWeightSum(label));
        }
        for (name, a) in members {
            gamma.insert(name.to_string(), a / sum);
        }
    }
    for t in &model.terms {
        if !partition.contains_key(&t.name) {
            return Err(Error::UnknownPredictor(t.name.clone()));
        }
    }
    Ok(MetricWeights {
        partition: partition.clone(),
        gamma,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub performance: f64,
    pub experience: f64,
}

pub fn player_metrics(weights: &MetricWeights, source: &impl FeatureSource) -> Result<MetricPair> {
    Ok(MetricPair {
        performance: weights.metric(Category::Performance, source)?,
        experience: weights.metric(Category::Experience, source)?,
    })
}

/// One player's appearance on a team's line in a season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineupEntry {
    pub player_id: String,
    pub season_year: i32,
    pub team: String,
    pub position: Position,
    pub snaps: u32,
    pub metrics: MetricPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerMetrics {
    pub player_id: String,
    pub season_year: i32,
    pub performance_metric: f64,
    pub experience_metric: f64,
    pub team_performance_metric: f64,
    pub team_experience_metric: f64,
}

impl FeatureSource for PlayerMetrics {
    fn feature(&self, name: &str) -> Option<f64> {
        match name {
            TEAM_PERFORMANCE => Some(self.team_performance_metric),
            TEAM_EXPERIENCE => Some(self.team_experience_metric),
            TEAM_PERFORMANCE_SQ => Some(self.team_performance_metric.powi(2)),
            TEAM_EXPERIENCE_SQ => Some(self.team_experience_metric.powi(2)),
            _ => None,
        }
    }
}

/// Averages each player's neighbors' metrics. The primary player at a
/// position is whoever logged the most snaps there for that team-season
/// (ties go to the smaller player id).
pub fn team_metrics(entries: &[LineupEntry]) -> Result<Vec<PlayerMetrics>> {
    let mut primary: BTreeMap<(&str, i32, Position), &LineupEntry> = BTreeMap::new();
    for e in entries {
        let slot = primary.entry((e.team.as_str(), e.season_year, e.position)).or_insert(e);
        if e.snaps > slot.snaps || (e.snaps == slot.snaps && e.player_id < slot.player_id) {
            *slot = e;
        }
    }
    entries
        .iter()
        .map(|e| {
            let neighbors = e
                .position
                .neighbors()
                .iter()
                .map(|&p| {
                    primary
                        .get(&(e.team.as_str(), e.season_year, p))
                        .map(|n| n.metrics)
                        .ok_or_else(|| Error::Vacancy {
                            team: e.team.clone(),
                            season: e.season_year,
                            position: p.to_string(),
                        })
                })
                .collect::<Result<Vec<MetricPair>>>()?;
            let k = neighbors.len() as f64;
            Ok(PlayerMetrics {
                player_id: e.player_id.clone(),
                season_year: e.season_year,
                performance_metric: e.metrics.performance,
                experience_metric: e.metrics.experience,
                team_performance_metric: neighbors.iter().map(|m| m.performance).sum::<f64>() / k,
                team_experience_metric: neighbors.iter().map(|m| m.experience).sum::<f64>() / k,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::pricing::ols::Term;

    fn term(name: &str, coefficient: f64) -> Term {
        Term {
            name: name.into(),
            coefficient,
            std_error: 1.0,
            t_value: coefficient,
            p_value: 0.01,
        }
    }

    fn model(terms: &[(&str, f64)]) -> PricingModel {
        PricingModel {
            intercept: term("(Intercept)", 1.0),
            terms: terms.iter().map(|&(n, c)| term(n, c)).collect(),
            n: 100,
            r2: 0.5,
            adjusted_r2: 0.5,
            rss: 1.0,
            tss: 2.0,
            sigma: 1.0,
            aicc: 0.0,
        }
    }

    fn weights(terms: &[(&str, f64)]) -> Result<MetricWeights> {
        let m = model(terms);
        normalized_weights(&m, &partition_predictors(&m)?)
    }

    #[test]
    fn taxonomy_labels() {
        let m = model(&[("Draft Round", -1.0), ("Stuff % differential", 1.0), ("Pro Bowl Selections", 2.0)]);
        let p = partition_predictors(&m).unwrap();
        assert_eq!(p["Draft Round"], Category::Experience);
        assert_eq!(p["Stuff % differential"], Category::Performance);
        assert_eq!(p["Pro Bowl Selections"], Category::Experience);
        assert!(matches!(
            partition_predictors(&model(&[("team_performance", 1.0)])),
            Err(Error::UnknownPredictor(_))
        ));
    }

    #[test]
    fn normalization_examples() {
        let w = weights(&[("age", 2.0), ("experience", 3.0)]).unwrap();
        assert_eq!((w.gamma["age"], w.gamma["experience"]), (0.4, 0.6));
        let w = weights(&[("sack_pct", 7.0)]).unwrap();
        assert_eq!(w.gamma["sack_pct"], 1.0);
        let w = weights(&[("age", -1.0), ("experience", 3.0)]).unwrap();
        assert_eq!((w.gamma["age"], w.gamma["experience"]), (-0.5, 1.5));
        assert!(matches!(
            weights(&[("age", -2.0), ("experience", 2.0)]),
            Err(Error::ZeroWeightSum("experience"))
        ));
    }

    #[test]
    fn metric_examples() {
        let w = weights(&[("age", 2.0), ("experience", 3.0)]).unwrap();
        let x = BTreeMap::from([("age".to_string(), 10.0), ("experience".to_string(), 10.0)]);
        assert!((player_metrics(&w, &x).unwrap().experience - 10.0).abs() < 1e-12);
        let zero = BTreeMap::from([("age".to_string(), 0.0), ("experience".to_string(), 0.0)]);
        assert_eq!(player_metrics(&w, &zero).unwrap().experience, 0.0);
        let w = weights(&[("stuff_pct_diff", 1.0), ("sack_pct", 3.0)]).unwrap();
        let x = BTreeMap::from([("stuff_pct_diff".to_string(), 4.0), ("sack_pct".to_string(), 8.0)]);
        assert!((player_metrics(&w, &x).unwrap().performance - 7.0).abs() < 1e-12);
        let missing = BTreeMap::from([("stuff_pct_diff".to_string(), 4.0)]);
        assert!(matches!(player_metrics(&w, &missing), Err(Error::MissingPredictor(_))));
    }

    fn entry(player: &str, position: Position, snaps: u32, perf: f64) -> LineupEntry {
        LineupEntry {
            player_id: player.into(),
            season_year: 2013,
            team: "NYG".into(),
            position,
            snaps,
            metrics: MetricPair {
                performance: perf,
                experience: -perf,
            },
        }
    }

    fn line() -> Vec<LineupEntry> {
        vec![
            entry("lt", Position::LT, 900, 1.0),
            entry("lg", Position::LG, 900, 2.0),
            entry("c", Position::C, 900, 9.0),
            entry("rg", Position::RG, 900, 4.0),
            entry("rt", Position::RT, 900, 5.0),
            entry("lg_backup", Position::LG, 100, 50.0),
        ]
    }

    #[test]
    fn neighbor_averages() {
        let m = team_metrics(&line()).unwrap();
        let get = |id: &str| m.iter().find(|p| p.player_id == id).unwrap();
        assert_eq!(get("c").team_performance_metric, 3.0);
        assert_eq!(get("lt").team_performance_metric, 2.0);
        assert_eq!(get("rt").team_experience_metric, -4.0);
        assert_eq!(get("lg_backup").team_performance_metric, 5.0);
    }

    #[test]
    fn vacancy_reported() {
        let lineup: Vec<_> = line().into_iter().filter(|e| e.position != Position::RG).collect();
        match team_metrics(&lineup).unwrap_err() {
            Error::Vacancy { position, .. } => assert_eq!(position, "RG"),
            other => panic!("unexpected {other}"),
        }
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(a in prop::collection::vec(-1e6f64..1e6, 1..6), b in prop::collection::vec(-1e6f64..1e6, 1..6)) {
            let e = ["age", "experience", "draft_round", "draft_pick", "pro_bowls", "pff_prior_avg"];
            let p = ["stuff_pct_diff", "sack_pct", "pressure_pct", "pff_current", "att_per_dropback", "yds_per_attempt_diff"];
            let mut terms: Vec<(&str, f64)> = e.iter().copied().zip(a.iter().copied()).collect();
            terms.extend(p.iter().copied().zip(b.iter().copied()));
            prop_assume!(a.iter().sum::<f64>().abs() > 1e-3 && b.iter().sum::<f64>().abs() > 1e-3);
            let w = weights(&terms).unwrap();
            for cat in [Category::Experience, Category::Performance] {
                let s: f64 = w.partition.iter().filter(|(_, c)| **c == cat).map(|(n, _)| w.gamma[n]).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12 * w.gamma.values().map(|g| g.abs()).sum::<f64>().max(1.0));
            }
        }

        #[test]
        fn metric_is_linear(x in prop::collection::vec(-100.0f64..100.0, 3), y in prop::collection::vec(-100.0f64..100.0, 3), a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let names = ["stuff_pct_diff", "sack_pct", "pff_current"];
            let w = weights(&[("stuff_pct_diff", 2.0), ("sack_pct", -1.0), ("pff_current", 4.0)]).unwrap();
            let map = |v: &[f64]| -> BTreeMap<String, f64> { names.iter().map(|n| n.to_string()).zip(v.iter().copied()).collect() };
            let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = player_metrics(&w, &map(&combo)).unwrap().performance;
            let rhs = a * player_metrics(&w, &map(&x)).unwrap().performance + b * player_metrics(&w, &map(&y)).unwrap().performance;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
