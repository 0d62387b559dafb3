use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("line {line}: cannot parse date `{value}`")]
    BadDate { line: u64, value: String },

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("no valid rows")]
    NoValidRows,

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("window {t1}..{t2} selects {n} trading days, need at least {min}")]
    TooFewPoints {
        t1: NaiveDate,
        t2: NaiveDate,
        n: usize,
        min: usize,
    },

    #[error("evaluation time {t} is not before the critical time {tc}")]
    PastCriticalTime { t: f64, tc: f64 },

    #[error("degenerate linear design: {0}")]
    Degenerate(String),

    #[error("all {0} restarts were degenerate")]
    AllRestartsDegenerate(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("out-of-sample violation: {0}")]
    Lookahead(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 configuration, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Lookahead(_) => 2,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::MissingColumn(_)
            | Error::BadDate { .. }
            | Error::DuplicateDate(_)
            | Error::NoValidRows
            | Error::InvalidSeries(_)
            | Error::TooFewPoints { .. }
            | Error::Empty(_) => 3,
            Error::PastCriticalTime { .. }
            | Error::Degenerate(_)
            | Error::AllRestartsDegenerate(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
