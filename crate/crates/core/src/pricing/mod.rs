//! Labor-market salary model, experience/performance metrics and the
//! neighbor-augmented second stage.

mod export;
mod metrics;
mod ols;
mod second_stage;
mod stepwise;

pub use export::{format_p, ExportRow, ModelExport};
pub use metrics::{
    normalized_weights, partition_predictors, player_metrics, team_metrics, LineupEntry, MetricPair,
    MetricWeights, PlayerMetrics, TEAM_EXPERIENCE, TEAM_EXPERIENCE_SQ, TEAM_PERFORMANCE, TEAM_PERFORMANCE_SQ,
};
pub use ols::{aicc, ols_fit, DesignData, PricingModel, Term, INTERCEPT};
pub use second_stage::{choose, second_stage_selection, ModelChoice, SecondStage, TEAM_COLUMNS};
pub use stepwise::{stepwise_select, SelectionRule, Step, StepAction, StepwiseResult};
