//! In-memory stage computations. Each takes its upstream states and returns
//! its own; file handling lives in the parent module.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::clustering::{cluster_analysis, ClusterSolution, Matrix};
use crate::dataset::{
    aggregate_all, apply_exclusions, build_feature_vectors, read_awards, read_contracts, read_game_records, read_pff,
    ExternalData, FeatureSource, MergeReport, Samples, SeasonFeatureVector,
};
use crate::error::{Error, Result};
use crate::pricing::{
    normalized_weights, partition_predictors, player_metrics, second_stage_selection, stepwise_select, team_metrics,
    DesignData, LineupEntry, MetricWeights, PlayerMetrics, PricingModel, SecondStage, StepwiseResult, TEAM_EXPERIENCE,
    TEAM_EXPERIENCE_SQ, TEAM_PERFORMANCE, TEAM_PERFORMANCE_SQ,
};
use crate::profiling::{profile_clusters, ClusterProfile};
use crate::rng::derive_seed;
use crate::salary_dist::{select_distribution, Selection};
use crate::valuation::{identify, rank_validation, ClusterFindings, Member, RankInput, ValidationRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestState {
    /// Every merged player-season, excluded or not.
    pub vectors: Vec<SeasonFeatureVector>,
    pub report: MergeReport,
    pub samples: Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceState {
    /// Candidates offered to stepwise selection.
    pub candidates: Vec<String>,
    /// Candidates dropped because they do not vary in the sample.
    pub pruned: Vec<String>,
    pub initial: StepwiseResult,
    pub second_stage: Option<SecondStage>,
    /// The model downstream stages use.
    pub model: PricingModel,
    /// Metric weights from the first-stage model.
    pub weights: MetricWeights,
    /// Experience and performance metrics of every player-season.
    pub lineup: Vec<LineupEntry>,
    /// Neighbor metrics of every player-season; empty without the second
    /// stage.
    pub metrics: Vec<PlayerMetrics>,
    pub warnings: Vec<String>,
}

impl PriceState {
    pub fn coefficients(&self) -> BTreeMap<String, f64> {
        self.model.terms.iter().map(|t| (t.name.clone(), t.coefficient)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub attributes: Vec<String>,
    /// (player, season) of each row of `x`, in clustering-sample order.
    pub rows: Vec<(String, i32)>,
    /// Unstandardized attribute values.
    pub x: Matrix,
    pub solution: ClusterSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub profiles: Vec<ClusterProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitState {
    pub lower_bound: f64,
    pub selections: Vec<Selection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyState {
    pub silhouette_mean: f64,
    pub clusters: Vec<ClusterFindings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateState {
    pub rows: Vec<ValidationRow>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

pub fn ingest(cfg: &RunConfig) -> Result<IngestState> {
    let p = &cfg.inputs;
    let games = read_game_records(open(&p.games)?, &file_label(&p.games))?;
    let external = ExternalData {
        awards: read_awards(open(&p.awards)?, &file_label(&p.awards))?,
        pff: read_pff(open(&p.pff)?, &file_label(&p.pff))?,
        contracts: read_contracts(open(&p.contracts)?, &file_label(&p.contracts))?,
        cap_table: cfg.cap.cap_table()?,
        reference_year: cfg.cap.reference_year,
    };
    let totals = aggregate_all(&games)?;
    let (vectors, report) = build_feature_vectors(&totals, &external)?;
    let samples = apply_exclusions(&vectors, &cfg.exclusions);
    Ok(IngestState {
        vectors,
        report,
        samples,
    })
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

/// Player-season features joined with its neighbor metrics.
struct Joined<'a> {
    vector: &'a SeasonFeatureVector,
    metrics: Option<&'a PlayerMetrics>,
}

impl FeatureSource for Joined<'_> {
    fn feature(&self, name: &str) -> Option<f64> {
        self.vector
            .feature(name)
            .or_else(|| self.metrics.and_then(|m| m.feature(name)))
    }
}

fn metrics_index(metrics: &[PlayerMetrics]) -> BTreeMap<(&str, i32), &PlayerMetrics> {
    metrics.iter().map(|m| ((m.player_id.as_str(), m.season_year), m)).collect()
}

/// Fits the salary model on the regression sample, derives metrics for
/// every player-season and, when enabled, runs the neighbor-augmented
/// second stage. A contract spanning several seasons gets the mean of its
/// seasons' neighbor metrics; the squared columns square that mean.
pub fn price(cfg: &RunConfig, ingest: &IngestState) -> Result<PriceState> {
    let obs = &ingest.samples.regression;
    if obs.len() < 3 {
        return Err(Error::InsufficientData(format!("{} regression observations", obs.len())));
    }
    let mut data = DesignData::new(obs.iter().map(|o| o.features.salary.cap_value_adjusted).collect());
    let (mut candidates, mut pruned, mut warnings) = (Vec::new(), Vec::new(), Vec::new());
    for name in &cfg.pricing.candidates {
        let col = obs
            .iter()
            .map(|o| o.feature(name).ok_or_else(|| Error::MissingPredictor(name.clone())))
            .collect::<Result<Vec<f64>>>()?;
        if is_constant(&col) {
            warnings.push(format!("candidate `{name}` is constant in the regression sample and was dropped"));
            pruned.push(name.clone());
        } else {
            data.insert(name, col)?;
            candidates.push(name.clone());
        }
    }
    let names: Vec<&str> = candidates.iter().map(String::as_str).collect();
    let initial = stepwise_select(&data, &names, cfg.pricing.rule)?;
    warnings.extend(initial.warnings.iter().cloned());
    let weights = normalized_weights(&initial.model, &partition_predictors(&initial.model)?)?;

    let lineup = ingest
        .vectors
        .iter()
        .map(|v| {
            Ok(LineupEntry {
                player_id: v.player_id.clone(),
                season_year: v.season_year,
                team: v.team.clone(),
                position: v.position,
                snaps: v.snaps,
                metrics: player_metrics(&weights, v)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (metrics, second_stage, model) = if cfg.pricing.second_stage {
        let metrics = team_metrics(&lineup)?;
        let index = metrics_index(&metrics);
        let mut perf = Vec::with_capacity(obs.len());
        let mut exp = Vec::with_capacity(obs.len());
        for o in obs {
            let seasons = o
                .season_years
                .iter()
                .map(|&y| {
                    index.get(&(o.player_id.as_str(), y)).copied().ok_or_else(|| {
                        Error::MissingPredictor(format!("neighbor metrics for {} in {y}", o.player_id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let n = seasons.len() as f64;
            perf.push(seasons.iter().map(|m| m.team_performance_metric).sum::<f64>() / n);
            exp.push(seasons.iter().map(|m| m.team_experience_metric).sum::<f64>() / n);
        }
        let columns = [
            (TEAM_PERFORMANCE_SQ, perf.iter().map(|v| v * v).collect()),
            (TEAM_EXPERIENCE_SQ, exp.iter().map(|v| v * v).collect()),
            (TEAM_PERFORMANCE, perf),
            (TEAM_EXPERIENCE, exp),
        ];
        let mut excluded = Vec::new();
        for (name, col) in columns {
            // An empty metric set leaves its neighbor columns at zero.
            if is_constant(&col) {
                warnings.push(format!("neighbor column `{name}` is constant and was dropped"));
                excluded.push(name);
            }
            data.insert(name, col)?;
        }
        let stage = second_stage_selection(&data, &names, &excluded, initial.clone(), cfg.pricing.rule)?;
        warnings.extend(stage.augmented.warnings.iter().cloned());
        let model = stage.chosen_model().clone();
        (metrics, Some(stage), model)
    } else {
        (Vec::new(), None, initial.model.clone())
    };
    Ok(PriceState {
        candidates,
        pruned,
        initial,
        second_stage,
        model,
        weights,
        lineup,
        metrics,
        warnings,
    })
}

/// Clusters the clustering sample on the final model's predictors.
pub fn cluster(cfg: &RunConfig, ingest: &IngestState, price: &PriceState) -> Result<ClusterState> {
    let attributes: Vec<String> = price.model.names().into_iter().map(String::from).collect();
    if attributes.is_empty() {
        return Err(Error::InsufficientData("the salary model selected no predictors to cluster on".into()));
    }
    let index = metrics_index(&price.metrics);
    let sample = &ingest.samples.clustering;
    let mut rows = Vec::with_capacity(sample.len());
    let mut values = Vec::with_capacity(sample.len());
    for v in sample {
        let joined = Joined {
            vector: v,
            metrics: index.get(&(v.player_id.as_str(), v.season_year)).copied(),
        };
        let row = attributes
            .iter()
            .map(|a| joined.feature(a).ok_or_else(|| Error::MissingPredictor(a.clone())))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((v.player_id.clone(), v.season_year));
        values.push(row);
    }
    let x = Matrix::from_rows(&values)?;
    let solution = cluster_analysis(&x, &attributes, derive_seed(cfg.seed, "cluster"), &cfg.clustering)?;
    Ok(ClusterState {
        attributes,
        rows,
        x,
        solution,
    })
}

pub fn profile(cfg: &RunConfig, price: &PriceState, cluster: &ClusterState) -> Result<ProfileState> {
    let profiles = profile_clusters(
        &cluster.x,
        &cluster.attributes,
        &cluster.solution.fit.assignments,
        cluster.solution.k(),
        &price.coefficients(),
        cfg.profiling.mode,
        cfg.profiling.significance,
    )?;
    Ok(ProfileState { profiles })
}

fn salaries(ingest: &IngestState) -> Vec<f64> {
    ingest
        .samples
        .clustering
        .iter()
        .map(|v| v.salary.cap_value_adjusted)
        .collect()
}

pub fn fit_distributions(cfg: &RunConfig, ingest: &IngestState, cluster: &ClusterState) -> Result<FitState> {
    let all = salaries(ingest);
    let lower = cfg.distribution.resolve_lower(&all)?;
    let selections = (0..cluster.solution.k())
        .map(|c| {
            let xs: Vec<f64> = cluster.solution.members(c).iter().map(|&i| all[i]).collect();
            select_distribution(
                c,
                &xs,
                lower,
                cfg.distribution.beta_upper_factor,
                cfg.distribution.min_cluster_size,
            )
        })
        .collect();
    Ok(FitState {
        lower_bound: lower,
        selections,
    })
}

pub fn identify_anomalies(
    cfg: &RunConfig,
    ingest: &IngestState,
    cluster: &ClusterState,
    profile: &ProfileState,
    fits: &FitState,
) -> Result<IdentifyState> {
    let sample = &ingest.samples.clustering;
    let sil = &cluster.solution.silhouettes;
    let clusters = (0..cluster.solution.k())
        .map(|c| {
            let members: Vec<Member> = cluster
                .solution
                .members(c)
                .into_iter()
                .map(|i| {
                    let v = &sample[i];
                    Member {
                        player_id: v.player_id.clone(),
                        season_year: v.season_year,
                        team: v.team.clone(),
                        position: v.position.group(),
                        cap_value_nominal: v.salary.cap_value_nominal,
                        cap_value_adjusted: v.salary.cap_value_adjusted,
                        silhouette: sil.values[i],
                    }
                })
                .collect();
            let p = &profile.profiles[c];
            let mut found = identify(c, &members, &fits.selections[c], p.direction, sil.sample_mean, cfg.valuation.alpha)?;
            if found.skipped.is_none() {
                found.skipped = p.skipped.clone();
            }
            Ok(found)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentifyState {
        silhouette_mean: sil.sample_mean,
        clusters,
    })
}

/// Ranks every analysed player-season within its position group by the
/// current-season PFF grade and by inflation-adjusted salary.
pub fn validate(cfg: &RunConfig, ingest: &IngestState, found: &IdentifyState) -> Result<ValidateState> {
    let population: Vec<RankInput> = ingest
        .samples
        .clustering
        .iter()
        .map(|v| RankInput {
            player_id: v.player_id.clone(),
            season_year: v.season_year,
            position: v.position.group(),
            rating: (!v.pff.current_missing).then_some(v.pff.rating_current_season),
            salary: v.salary.cap_value_adjusted,
        })
        .collect();
    let findings: Vec<_> = found.clusters.iter().flat_map(|c| c.findings().cloned()).collect();
    Ok(ValidateState {
        rows: rank_validation(&findings, &population, cfg.valuation.rank_gap),
    })
}
