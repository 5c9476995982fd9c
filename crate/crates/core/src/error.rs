use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },

    #[error("{file}:{line}: column `{column}`: {message}")]
    Parse {
        file: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{file}:{line}: {message}")]
    RecordInvariant {
        file: String,
        line: u64,
        message: String,
    },

    #[error("duplicate key {key} in {file}")]
    DuplicateKey { file: String, key: String },

    #[error("no game records for player `{player_id}` in season {season}")]
    EmptyRecords { player_id: String, season: i32 },

    #[error("salary cap table has no entry for {0}")]
    MissingCapYear(i32),

    #[error("design matrix is rank deficient: `{column}` is collinear with {collinear_with:?}")]
    RankDeficient {
        column: String,
        collinear_with: Vec<String>,
    },

    #[error("predictor `{0}` is not in the experience/performance taxonomy")]
    UnknownPredictor(String),

    #[error("coefficients of the {0} predictors sum to zero; weights are undefined")]
    ZeroWeightSum(&'static str),

    #[error("no value for predictor `{0}`")]
    MissingPredictor(String),

    #[error("team {team} season {season}: no player at {position}")]
    Vacancy {
        team: String,
        season: i32,
        position: String,
    },

    #[error("column `{0}` has zero variance")]
    ConstantColumn(String),

    #[error("value {value} lies outside the support [{lower}, {upper}]")]
    OutOfSupport { value: f64, lower: f64, upper: f64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("stage `{stage}` needs the output of `{required}`; run `lineval {required}` first ({missing} not found)")]
    MissingStage {
        stage: String,
        required: String,
        missing: PathBuf,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse category used by the CLI for exit codes and error prefixes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::MissingColumn { .. }
            | Error::Parse { .. }
            | Error::RecordInvariant { .. }
            | Error::DuplicateKey { .. }
            | Error::Csv(_)
            | Error::Json(_) => "input",
            Error::Config(_) | Error::InvalidArgument(_) => "config",
            Error::MissingStage { .. } => "dependency",
            Error::Io { .. } => "io",
            _ => "analysis",
        }
    }
}
