use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{CapTable, Predictor};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Linear salary function in reference-year dollars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruePricing {
    pub intercept: f64,
    /// Keyed by predictor key.
    pub coefficients: BTreeMap<String, f64>,
}

impl TruePricing {
    pub fn evaluate(&self, x: impl Fn(&str) -> Option<f64>) -> Result<f64> {
        let mut total = self.intercept;
        for (name, alpha) in &self.coefficients {
            total += alpha * x(name).ok_or_else(|| Error::MissingPredictor(name.clone()))?;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    /// Centre of the archetype for every priced predictor.
    pub centroid: BTreeMap<String, f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyPlan {
    pub archetype: usize,
    /// Target quantile of the archetype's salary law; low quantiles plant
    /// underpaid players, high quantiles overpaid ones.
    pub quantile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Multiplier on `within_sd` for feature noise around the centroid.
    pub feature_scale: f64,
    /// Standard deviation of log salary above the minimum.
    pub salary_sigma: f64,
    /// Ordinary members' noise is truncated to this many standard
    /// deviations; `None` leaves it Gaussian.
    pub band: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Player-seasons in the analysis sample, before lineup filler.
    pub n_players: usize,
    pub first_season: i32,
    pub n_seasons: usize,
    pub pricing: TruePricing,
    pub archetypes: Vec<Archetype>,
    /// Within-archetype standard deviation of each priced predictor.
    pub within_sd: BTreeMap<String, f64>,
    pub noise: NoiseConfig,
    pub anomalies: Vec<AnomalyPlan>,
    /// Salary floor in reference-year dollars; every salary is above it.
    pub min_salary: f64,
    pub cap_table: CapTable,
    pub reference_year: i32,
}

pub fn default_cap_table() -> CapTable {
    CapTable::from([
        (2011, 120_000_000.0),
        (2012, 120_600_000.0),
        (2013, 123_000_000.0),
        (2014, 133_000_000.0),
        (2015, 143_280_000.0),
    ])
}

/// Priced predictors of the bundled scenarios with their coefficient,
/// population centre and within-archetype spread.
const PRICED: [(Predictor, f64, f64, f64); 5] = [
    (Predictor::Age, 200_000.0, 29.0, 1.2),
    (Predictor::PffPriorAvg, 150_000.0, 0.0, 1.6),
    (Predictor::YdsPerAttemptDiff, 1_200_000.0, 0.0, 0.2),
    (Predictor::StuffPctDiff, -160_000.0, 0.0, 1.5),
    (Predictor::SuccessfulRunPctDiff, 100_000.0, 0.0, 2.4),
];

const MIN_SALARY: f64 = 750_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Well separated archetypes and deep anomalies.
    Separable,
    /// 133 player-seasons in seven archetypes of uneven size.
    Paperlike,
    /// Overlapping archetypes with untruncated noise.
    Hard,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separable" => Ok(Preset::Separable),
            "paperlike" => Ok(Preset::Paperlike),
            "hard" => Ok(Preset::Hard),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected separable, paperlike or hard)"
            ))),
        }
    }
}

struct Layout {
    sizes: Vec<usize>,
    separation: f64,
    half_width: f64,
    mixed: bool,
}

/// Draws archetype centres in units of the within-archetype spread: every
/// pair at least `separation` apart, every price at least 1M above the
/// floor and, when `mixed`, each archetype strongly above the population on
/// some salary-raising trait and strongly below on another.
fn centroids(seed: u64, layout: &Layout) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream(seed, "synth/centroids");
    let d = PRICED.len();
    let total: usize = layout.sizes.iter().sum();
    'attempt: for _ in 0..2000 {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for _ in 0..layout.sizes.len() {
            let mut placed = false;
            for _ in 0..5000 {
                let z: Vec<f64> = (0..d)
                    .map(|_| rng.random_range(-layout.half_width..=layout.half_width))
                    .collect();
                let far = out.iter().all(|c| {
                    c.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= layout.separation
                });
                let price = PRICED
                    .iter()
                    .zip(&z)
                    .map(|((_, alpha, centre, sd), zj)| alpha * (centre + zj * sd))
                    .sum::<f64>()
                    + INTERCEPT;
                if far && price - MIN_SALARY >= 1.0e6 {
                    out.push(z);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'attempt;
            }
        }
        if layout.mixed {
            let mean: Vec<f64> = (0..d)
                .map(|j| {
                    out.iter().zip(&layout.sizes).map(|(c, &n)| c[j] * n as f64).sum::<f64>() / total as f64
                })
                .collect();
            for c in &out {
                let signs: Vec<f64> = (0..d)
                    .filter(|&j| (c[j] - mean[j]).abs() >= 2.0)
                    .map(|j| PRICED[j].1.signum() * (c[j] - mean[j]).signum())
                    .collect();
                if !(signs.contains(&1.0) && signs.contains(&-1.0)) {
                    continue 'attempt;
                }
            }
        }
        return Ok(out);
    }
    Err(Error::Config("could not place archetype centroids; relax the separation".into()))
}

const INTERCEPT: f64 = -800_000.0;

fn build(seed: u64, layout: Layout, noise: NoiseConfig, anomalies: Vec<AnomalyPlan>) -> Result<SynthConfig> {
    let zs = centroids(seed, &layout)?;
    let total: usize = layout.sizes.iter().sum();
    let archetypes = zs
        .iter()
        .zip(&layout.sizes)
        .map(|(z, &n)| Archetype {
            centroid: PRICED
                .iter()
                .zip(z)
                .map(|((p, _, centre, sd), zj)| (p.key().to_string(), centre + zj * sd))
                .collect(),
            weight: n as f64 / total as f64,
        })
        .collect();
    Ok(SynthConfig {
        seed,
        n_players: total,
        first_season: 2013,
        n_seasons: 2,
        pricing: TruePricing {
            intercept: INTERCEPT,
            coefficients: PRICED.iter().map(|(p, a, _, _)| (p.key().to_string(), *a)).collect(),
        },
        archetypes,
        within_sd: PRICED.iter().map(|(p, _, _, sd)| (p.key().to_string(), *sd)).collect(),
        noise,
        anomalies,
        min_salary: MIN_SALARY,
        cap_table: default_cap_table(),
        reference_year: 2014,
    })
}

impl SynthConfig {
    /// Well separated archetypes of 40 player-seasons each, with one
    /// overpaid and one underpaid player planted in every archetype.
    pub fn separable(seed: u64, n_archetypes: usize) -> Result<Self> {
        if !(1..=12).contains(&n_archetypes) {
            return Err(Error::Config("separable scenarios take 1 to 12 archetypes".into()));
        }
        let anomalies = (0..n_archetypes)
            .flat_map(|a| {
                [
                    AnomalyPlan {
                        archetype: a,
                        quantile: 0.995,
                    },
                    AnomalyPlan {
                        archetype: a,
                        quantile: 0.005,
                    },
                ]
            })
            .collect();
        build(
            seed,
            Layout {
                sizes: vec![40; n_archetypes],
                separation: 10.0,
                half_width: 6.0,
                mixed: true,
            },
            NoiseConfig {
                feature_scale: 1.0,
                salary_sigma: 0.05,
                band: Some(1.0),
            },
            anomalies,
        )
    }

    /// Seven archetypes sized like a two-season league sample, with five
    /// anomalies spread over the larger ones.
    pub fn paperlike(seed: u64) -> Result<Self> {
        let plan = [(0, 0.995), (1, 0.005), (2, 0.995), (3, 0.005), (4, 0.995)];
        build(
            seed,
            Layout {
                sizes: vec![25, 17, 18, 23, 24, 8, 18],
                separation: 8.0,
                half_width: 6.0,
                mixed: true,
            },
            NoiseConfig {
                feature_scale: 1.0,
                salary_sigma: 0.05,
                band: Some(1.0),
            },
            plan.iter()
                .map(|&(archetype, quantile)| AnomalyPlan { archetype, quantile })
                .collect(),
        )
    }

    /// Overlapping archetypes with Gaussian noise and shallower anomalies.
    pub fn hard(seed: u64) -> Result<Self> {
        let plan = [(0, 0.99), (1, 0.01), (2, 0.99), (3, 0.01)];
        build(
            seed,
            Layout {
                sizes: vec![40; 5],
                separation: 3.0,
                half_width: 4.0,
                mixed: false,
            },
            NoiseConfig {
                feature_scale: 1.0,
                salary_sigma: 0.1,
                band: None,
            },
            plan.iter()
                .map(|&(archetype, quantile)| AnomalyPlan { archetype, quantile })
                .collect(),
        )
    }

    pub fn preset(preset: Preset, seed: u64) -> Result<Self> {
        match preset {
            Preset::Separable => SynthConfig::separable(seed, 5),
            Preset::Paperlike => SynthConfig::paperlike(seed),
            Preset::Hard => SynthConfig::hard(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.archetypes.iter().map(|a| a.weight).sum();
        if self.archetypes.is_empty() || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("archetype weights sum to {sum}, not 1")));
        }
        if self.archetypes.iter().any(|a| !(a.weight >= 0.0)) {
            return Err(Error::Config("archetype weights must be non-negative".into()));
        }
        for a in &self.anomalies {
            let q = a.quantile;
            if !((q > 0.0 && q <= 0.05) || (0.95..1.0).contains(&q)) {
                return Err(Error::Config(format!("anomaly quantile {q} is not in (0, 0.05] or [0.95, 1)")));
            }
            if a.archetype >= self.archetypes.len() {
                return Err(Error::Config(format!("anomaly refers to archetype {}", a.archetype)));
            }
        }
        for name in self.pricing.coefficients.keys() {
            if Predictor::from_name(name).is_none() {
                return Err(Error::UnknownPredictor(name.clone()));
            }
            if self.archetypes.iter().any(|a| !a.centroid.contains_key(name)) {
                return Err(Error::Config(format!("archetype centroid lacks priced predictor `{name}`")));
            }
        }
        if self.n_seasons == 0 {
            return Err(Error::Config("at least one season is needed".into()));
        }
        for year in self.first_season - 2..self.first_season + self.n_seasons as i32 {
            if year >= 2011 && !self.cap_table.contains_key(&year) {
                return Err(Error::MissingCapYear(year));
            }
        }
        if !self.cap_table.contains_key(&self.reference_year) {
            return Err(Error::MissingCapYear(self.reference_year));
        }
        Ok(())
    }

    /// Player-seasons per archetype by largest remainder.
    pub fn sizes(&self) -> Vec<usize> {
        let raw: Vec<f64> = self.archetypes.iter().map(|a| a.weight * self.n_players as f64).collect();
        let mut sizes: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
        let mut left = self.n_players - sizes.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
        for i in order {
            if left == 0 {
                break;
            }
            sizes[i] += 1;
            left -= 1;
        }
        sizes
    }
}

/// Standard normal draw, redrawn until inside `band` when one is set.
pub(crate) fn banded_normal(rng: &mut impl Rng, band: Option<f64>) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if band.is_none_or(|b| z.abs() <= b) {
            return z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in [Preset::Separable, Preset::Paperlike, Preset::Hard] {
            SynthConfig::preset(p, 3).unwrap().validate().unwrap();
        }
        assert_eq!(SynthConfig::paperlike(1).unwrap().sizes(), vec![25, 17, 18, 23, 24, 8, 18]);
    }

    #[test]
    fn separation_in_within_units() {
        let c = SynthConfig::separable(9, 7).unwrap();
        for (i, a) in c.archetypes.iter().enumerate() {
            for b in &c.archetypes[i + 1..] {
                let d: f64 = c
                    .within_sd
                    .iter()
                    .map(|(k, sd)| ((a.centroid[k] - b.centroid[k]) / sd).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(d >= 8.0, "{d}");
            }
        }
    }

    #[test]
    fn invalid_plans_rejected() {
        let mut c = SynthConfig::separable(1, 3).unwrap();
        c.anomalies[0].quantile = 0.5;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::separable(1, 3).unwrap();
        c.archetypes[0].weight = 0.9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn largest_remainder_sizes() {
        let mut c = SynthConfig::separable(1, 3).unwrap();
        c.n_players = 100;
        assert_eq!(c.sizes(), vec![34, 33, 33]);
    }
}
