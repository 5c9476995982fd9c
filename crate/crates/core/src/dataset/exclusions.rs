use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::{FeatureSource, SeasonFeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExclusionRules {
    pub exclude_rookie_contracts: bool,
    pub require_ufa: bool,
    /// Contracts signed before this year are dropped.
    pub min_signing_year: Option<i32>,
}

impl Default for ExclusionRules {
    fn default() -> Self {
        ExclusionRules {
            exclude_rookie_contracts: true,
            require_ufa: true,
            min_signing_year: Some(2011),
        }
    }
}

impl ExclusionRules {
    pub fn keeps(&self, v: &SeasonFeatureVector) -> bool {
        !(self.exclude_rookie_contracts && v.contract.rookie_contract)
            && !(self.require_ufa && !v.contract.unrestricted_fa_at_signing)
            && self.min_signing_year.is_none_or(|min| v.contract.signing_year >= min)
    }
}

/// One regression data point: every season a player spent under one contract,
/// averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionObservation {
    pub player_id: String,
    pub signing_year: i32,
    pub season_years: Vec<i32>,
    /// Indices of the constituent seasons in the clustering sample.
    pub members: Vec<usize>,
    pub features: SeasonFeatureVector,
}

impl FeatureSource for RegressionObservation {
    fn feature(&self, name: &str) -> Option<f64> {
        self.features.feature(name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    pub regression: Vec<RegressionObservation>,
    pub clustering: Vec<SeasonFeatureVector>,
}

/// Drops excluded seasons and collapses each contract to one regression row.
/// The clustering sample keeps surviving seasons unchanged, sorted by
/// (player, season).
pub fn apply_exclusions(seasons: &[SeasonFeatureVector], rules: &ExclusionRules) -> Samples {
    let mut clustering: Vec<SeasonFeatureVector> = seasons.iter().filter(|v| rules.keeps(v)).cloned().collect();
    clustering.sort_by(|a, b| (&a.player_id, a.season_year).cmp(&(&b.player_id, b.season_year)));

    let mut groups: BTreeMap<(&str, i32), Vec<usize>> = BTreeMap::new();
    for (i, v) in clustering.iter().enumerate() {
        groups
            .entry((v.player_id.as_str(), v.contract.signing_year))
            .or_default()
            .push(i);
    }
    let regression = groups
        .into_iter()
        .map(|((player, signing_year), members)| {
            let refs: Vec<&SeasonFeatureVector> = members.iter().map(|&i| &clustering[i]).collect();
            RegressionObservation {
                player_id: player.to_string(),
                signing_year,
                season_years: refs.iter().map(|v| v.season_year).collect(),
                features: SeasonFeatureVector::average(&refs),
                members,
            }
        })
        .collect();
    Samples { regression, clustering }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::{Predictor, Position};

    pub(crate) fn vector(player: &str, season: i32, signing: i32) -> SeasonFeatureVector {
        let mut v = SeasonFeatureVector {
            player_id: player.into(),
            season_year: season,
            team: "NYG".into(),
            position: Position::LG,
            snaps: 900,
            demographics: Default::default(),
            awards: Default::default(),
            pff: Default::default(),
            differentials: Default::default(),
            differential_flags: Default::default(),
            salary: Default::default(),
            contract: Default::default(),
        };
        v.contract.signing_year = signing;
        v.contract.unrestricted_fa_at_signing = true;
        v.salary.cap_value_adjusted = 1e6;
        v.salary.cap_value_nominal = 1e6;
        v
    }

    #[test]
    fn rookie_contract_dropped() {
        let mut v = vector("a", 2013, 2012);
        v.contract.rookie_contract = true;
        let s = apply_exclusions(&[v], &ExclusionRules::default());
        assert!(s.regression.is_empty() && s.clustering.is_empty());
    }

    #[test]
    fn pre_2011_and_non_ufa_dropped() {
        let old = vector("a", 2013, 2010);
        let mut rfa = vector("b", 2013, 2012);
        rfa.contract.unrestricted_fa_at_signing = false;
        let s = apply_exclusions(&[old, rfa], &ExclusionRules::default());
        assert!(s.clustering.is_empty());
    }

    #[test]
    fn shared_contract_averaged() {
        let mut a = vector("a", 2013, 2012);
        let mut b = vector("a", 2014, 2012);
        a.differentials.stuff_pct_diff = -2.0;
        b.differentials.stuff_pct_diff = 3.0;
        a.demographics.age = 28.0;
        b.demographics.age = 29.0;
        b.salary.cap_value_adjusted = 2e6;
        let s = apply_exclusions(&[b.clone(), a.clone()], &ExclusionRules::default());
        assert_eq!(s.clustering, vec![a, b]);
        assert_eq!(s.regression.len(), 1);
        let r = &s.regression[0];
        assert_eq!(r.season_years, vec![2013, 2014]);
        assert_eq!(r.features.value(Predictor::StuffPctDiff), 0.5);
        assert_eq!(r.features.value(Predictor::Age), 28.5);
        assert_eq!(r.features.salary.cap_value_adjusted, 1.5e6);
    }

    proptest! {
        #[test]
        fn averaging_is_exact_and_clustering_untouched(xs in prop::collection::vec(-50.0f64..50.0, 1..5)) {
            let seasons: Vec<_> = xs.iter().enumerate().map(|(i, &x)| {
                let mut v = vector("p", 2012 + i as i32, 2012);
                v.differentials.sack_pct = x;
                v
            }).collect();
            let s = apply_exclusions(&seasons, &ExclusionRules::default());
            prop_assert_eq!(&s.clustering, &seasons);
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((s.regression[0].features.value(Predictor::SackPct) - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
        }
    }
}
