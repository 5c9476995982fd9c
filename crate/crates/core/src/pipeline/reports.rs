//! Delimited-text reports written next to each stage's state.

use serde::Serialize;

use super::stages::{ClusterState, FitState, IdentifyState, IngestState, PriceState, ProfileState, ValidateState};
use super::StageOutput;
use crate::dataset::{Predictor, SeasonFeatureVector};
use crate::error::Result;
use crate::pricing::{ModelExport, StepwiseResult};
use crate::salary_dist::{ChiSquared, Selection};
use crate::valuation::{ValuationFinding, Verdict};

/// Columns of `undervalued.csv` and `overvalued.csv`.
pub const FINDINGS_COLUMNS: [&str; 9] = [
    "player",
    "year",
    "team",
    "position",
    "cap_value",
    "cluster",
    "tail_probability",
    "silhouette",
    "gate_passed",
];

pub const VALIDATION_COLUMNS: [&str; 5] = [
    "player",
    "year",
    "position",
    "relative_performance_rank",
    "relative_salary_rank",
];

pub const UNDERVALUED_FILE: &str = "undervalued.csv";
pub const OVERVALUED_FILE: &str = "overvalued.csv";
pub const VALIDATION_FILE: &str = "validation.csv";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv<I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()).into())
}

pub(super) fn ingest(state: &IngestState) -> Result<StageOutput> {
    let mut out = StageOutput::new(state)?;
    let kept: std::collections::BTreeSet<(&str, i32)> = state
        .samples
        .clustering
        .iter()
        .map(|v| (v.player_id.as_str(), v.season_year))
        .collect();
    let mut header = vec![
        "player_id",
        "season_year",
        "team",
        "position",
        "included",
        "signing_year",
        "rookie_contract",
        "ufa",
        "snaps",
    ];
    header.extend(Predictor::ALL.iter().map(|p| p.key()));
    header.extend(["cap_value_nominal", "cap_value_adjusted"]);
    let row = |v: &SeasonFeatureVector| {
        let mut r = vec![
            v.player_id.clone(),
            v.season_year.to_string(),
            v.team.clone(),
            v.position.to_string(),
            kept.contains(&(v.player_id.as_str(), v.season_year)).to_string(),
            v.contract.signing_year.to_string(),
            v.contract.rookie_contract.to_string(),
            v.contract.unrestricted_fa_at_signing.to_string(),
            v.snaps.to_string(),
        ];
        r.extend(Predictor::ALL.iter().map(|&p| v.value(p).to_string()));
        r.push(v.salary.cap_value_nominal.to_string());
        r.push(v.salary.cap_value_adjusted.to_string());
        r
    };
    out.add("features.csv", csv(&header, state.vectors.iter().map(row))?);
    out.add_json("merge_report.json", &state.report)?;
    Ok(out)
}

fn steps<'a>(stage: &str, result: &'a StepwiseResult) -> impl Iterator<Item = Vec<String>> + 'a {
    let stage = stage.to_string();
    result.steps.iter().map(move |s| {
        vec![
            stage.clone(),
            serde_json::to_value(s.action).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            s.predictor.clone(),
            s.aicc.to_string(),
        ]
    })
}

#[derive(Serialize)]
struct SecondStageSummary {
    chosen: crate::pricing::ModelChoice,
    initial_adjusted_r2: f64,
    augmented_adjusted_r2: f64,
    augmented_predictors: Vec<String>,
}

pub(super) fn price(state: &PriceState) -> Result<StageOutput> {
    let mut out = StageOutput::new(state)?;
    let initial = ModelExport::new(&state.initial.model, Some(&state.weights));
    out.add("initial_model.tsv", initial.render_table().into_bytes());
    out.add_json("initial_model.json", &initial)?;
    let last = ModelExport::new(&state.model, None);
    out.add("model.tsv", last.render_table().into_bytes());
    out.add_json("model.json", &last)?;
    let mut rows: Vec<Vec<String>> = steps("initial", &state.initial).collect();
    if let Some(s) = &state.second_stage {
        rows.extend(steps("augmented", &s.augmented));
        out.add_json(
            "second_stage.json",
            &SecondStageSummary {
                chosen: s.chosen,
                initial_adjusted_r2: s.initial.model.adjusted_r2,
                augmented_adjusted_r2: s.augmented.model.adjusted_r2,
                augmented_predictors: s.augmented.selected().into_iter().map(String::from).collect(),
            },
        )?;
    }
    out.add("steps.csv", csv(&["stage", "action", "predictor", "aicc"], rows)?);
    let team: std::collections::BTreeMap<(&str, i32), &crate::pricing::PlayerMetrics> =
        state.metrics.iter().map(|m| ((m.player_id.as_str(), m.season_year), m)).collect();
    out.add(
        "metrics.csv",
        csv(
            &[
                "player_id",
                "season_year",
                "team",
                "position",
                "performance_metric",
                "experience_metric",
                "team_performance_metric",
                "team_experience_metric",
            ],
            state.lineup.iter().map(|e| {
                let t = team.get(&(e.player_id.as_str(), e.season_year));
                vec![
                    e.player_id.clone(),
                    e.season_year.to_string(),
                    e.team.clone(),
                    e.position.to_string(),
                    e.metrics.performance.to_string(),
                    e.metrics.experience.to_string(),
                    opt(t.map(|m| m.team_performance_metric)),
                    opt(t.map(|m| m.team_experience_metric)),
                ]
            }),
        )?,
    );
    let mut warnings = state.warnings.join("\n");
    if !warnings.is_empty() {
        warnings.push('\n');
    }
    out.add("warnings.txt", warnings.into_bytes());
    Ok(out)
}

#[derive(Serialize)]
struct ClusterSummary<'a> {
    k: usize,
    attributes: &'a [String],
    selection: &'a Option<crate::clustering::KSelection>,
    silhouette_mean: f64,
    sizes: Vec<usize>,
    standardization: &'a crate::clustering::Standardization,
}

pub(super) fn cluster(state: &ClusterState) -> Result<StageOutput> {
    let mut out = StageOutput::new(state)?;
    let s = &state.solution;
    out.add(
        "assignments.csv",
        csv(
            &["player_id", "season_year", "cluster", "silhouette"],
            state.rows.iter().enumerate().map(|(i, (p, y))| {
                vec![
                    p.clone(),
                    y.to_string(),
                    s.fit.assignments[i].to_string(),
                    s.silhouettes.values[i].to_string(),
                ]
            }),
        )?,
    );
    out.add(
        "kl_curve.csv",
        csv(
            &["k", "within_ss", "diff", "c"],
            s.kl.within_ss.iter().map(|(k, w)| {
                vec![
                    k.to_string(),
                    w.to_string(),
                    opt(s.kl.diff.get(k)),
                    opt(s.kl.c.get(k)),
                ]
            }),
        )?,
    );
    let mut header = vec!["cluster".to_string(), "size".to_string()];
    header.extend(state.attributes.iter().cloned());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let sizes = s.fit.cluster_sizes();
    out.add(
        "centroids.csv",
        csv(
            &header,
            (0..s.k()).map(|c| {
                let mut r = vec![c.to_string(), sizes[c].to_string()];
                r.extend(s.fit.centroids.row(c).iter().map(f64::to_string));
                r
            }),
        )?,
    );
    out.add_json(
        "summary.json",
        &ClusterSummary {
            k: s.k(),
            attributes: &state.attributes,
            selection: &s.selection,
            silhouette_mean: s.silhouettes.sample_mean,
            sizes,
            standardization: &s.standardization,
        },
    )?;
    Ok(out)
}

pub(super) fn profile(state: &ProfileState) -> Result<StageOutput> {
    let mut out = StageOutput::new(state)?;
    out.add(
        "clusters.csv",
        csv(
            &["cluster", "size", "direction", "narrative", "skipped"],
            state.profiles.iter().map(|p| {
                vec![
                    p.cluster.to_string(),
                    p.size.to_string(),
                    p.direction.to_string(),
                    p.narrative.clone(),
                    p.skipped.clone().unwrap_or_default(),
                ]
            }),
        )?,
    );
    out.add(
        "tests.csv",
        csv(
            &["cluster", "predictor", "cluster_mean", "overall_mean", "t", "p_value", "significant"],
            state.profiles.iter().flat_map(|p| {
                p.stats.iter().map(move |s| {
                    vec![
                        p.cluster.to_string(),
                        s.predictor.clone(),
                        s.cluster_mean.to_string(),
                        s.overall_mean.to_string(),
                        s.t.to_string(),
                        s.p_value.to_string(),
                        s.significant.to_string(),
                    ]
                })
            }),
        )?,
    );
    Ok(out)
}

pub(super) fn fit_dist(state: &FitState) -> Result<StageOutput> {
    let mut out = StageOutput::new(state)?;
    let mut rows = Vec::new();
    let mut diag = Vec::new();
    for sel in &state.selections {
        let (cluster, winner, skipped) = match sel {
            Selection::Selected { fitted, .. } => (fitted.cluster, Some(fitted.fit.family()), String::new()),
            Selection::Skipped { cluster, reason, .. } => (*cluster, None, reason.clone()),
        };
        if sel.ranking().is_empty() {
            rows.push(vec![cluster.to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), "false".into(), skipped.clone()]);
        }
        for c in sel.ranking() {
            let names = c.family.parameter_names();
            let (chi_stat, chi_df, chi_p) = match &c.chi_squared {
                Some(ChiSquared::Computed { statistic, df, p_value, .. }) => {
                    (statistic.to_string(), df.to_string(), p_value.to_string())
                }
                _ => Default::default(),
            };
            let fit = c.fit.as_ref();
            rows.push(vec![
                cluster.to_string(),
                c.family.to_string(),
                format!("{}={}", names[0], opt(fit.map(|f| f.distribution.params[0]))),
                format!("{}={}", names[1], opt(fit.map(|f| f.distribution.params[1]))),
                opt(fit.map(|f| f.distribution.lower)),
                opt(fit.and_then(|f| f.distribution.upper)),
                opt(fit.map(|f| f.log_likelihood)),
                opt(fit.map(|f| f.aic)),
                opt(fit.map(|f| f.converged)),
                chi_stat,
                chi_df,
                chi_p,
                opt(fit.map(|f| f.gradient_norm)),
                (winner == Some(c.family)).to_string(),
                c.excluded.clone().unwrap_or_else(|| skipped.clone()),
            ]);
        }
        if let Some(f) = sel.fitted() {
            for (kind, series) in [("pp", &f.diagnostics.pp), ("qq", &f.diagnostics.qq)] {
                for (i, (x, y)) in series.iter().enumerate() {
                    diag.push(vec![cluster.to_string(), kind.to_string(), (i + 1).to_string(), x.to_string(), y.to_string()]);
                }
            }
        }
    }
    out.add(
        "fits.csv",
        csv(
            &[
                "cluster",
                "family",
                "param1",
                "param2",
                "lower",
                "upper",
                "log_likelihood",
                "aic",
                "converged",
                "chi2_statistic",
                "chi2_df",
                "chi2_p_value",
                "gradient_norm",
                "selected",
                "note",
            ],
            rows,
        )?,
    );
    out.add("diagnostics.csv", csv(&["cluster", "series", "i", "x", "y"], diag)?);
    Ok(out)
}

fn finding_row(f: &ValuationFinding) -> Vec<String> {
    vec![
        f.player_id.clone(),
        f.season_year.to_string(),
        f.team.clone(),
        f.position.to_string(),
        format!("{:.0}", f.cap_value_nominal),
        f.cluster.to_string(),
        f.tail_probability.to_string(),
        f.silhouette.to_string(),
        f.gate_passed.to_string(),
    ]
}

pub(super) fn identify(state: &IdentifyState) -> Result<StageOutput> {
    let mut out = StageOutput::new(state)?;
    for (name, verdict) in [(UNDERVALUED_FILE, Verdict::Undervalued), (OVERVALUED_FILE, Verdict::Overvalued)] {
        let rows = state
            .clusters
            .iter()
            .flat_map(|c| c.findings())
            .filter(|f| f.verdict == verdict)
            .map(finding_row);
        out.add(name, csv(&FINDINGS_COLUMNS, rows)?);
    }
    // Pre-gate candidates of both directions.
    let mut header = FINDINGS_COLUMNS.to_vec();
    header.push("verdict");
    let rows = state.clusters.iter().flat_map(|c| &c.candidates).map(|f| {
        let mut row = finding_row(f);
        row.push(f.verdict.to_string());
        row
    });
    out.add("candidates.csv", csv(&header, rows)?);
    out.add(
        "clusters.csv",
        csv(
            &["cluster", "direction", "candidates", "findings", "skipped"],
            state.clusters.iter().map(|c| {
                vec![
                    c.cluster.to_string(),
                    c.direction.to_string(),
                    c.candidates.len().to_string(),
                    c.findings().count().to_string(),
                    c.skipped.clone().unwrap_or_default(),
                ]
            }),
        )?,
    );
    Ok(out)
}

pub(super) fn validate(state: &ValidateState) -> Result<StageOutput> {
    let mut out = StageOutput::new(state)?;
    out.add(
        VALIDATION_FILE,
        csv(
            &VALIDATION_COLUMNS,
            state.rows.iter().map(|r| {
                vec![
                    r.player_id.clone(),
                    r.season_year.to_string(),
                    r.position.to_string(),
                    opt(r.relative_performance_rank),
                    opt(r.relative_salary_rank),
                ]
            }),
        )?,
    );
    out.add(
        "corroboration.csv",
        csv(
            &["player", "year", "verdict", "corroborated"],
            state.rows.iter().map(|r| {
                vec![
                    r.player_id.clone(),
                    r.season_year.to_string(),
                    r.verdict.to_string(),
                    opt(r.corroborated),
                ]
            }),
        )?,
    );
    Ok(out)
}
