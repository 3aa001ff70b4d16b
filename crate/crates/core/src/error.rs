use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A properness (or robustness) precondition does not hold for the requested target.
    #[error("improper target: {0}")]
    Improper(String),

    #[error("prior bound violated: log prior {log_prior} exceeds log max(C, C/sigma) = {log_bound}")]
    PriorBound { log_prior: f64, log_bound: f64 },

    #[error("rank-deficient design: column {column} is linearly dependent on the preceding ones")]
    RankDeficient { column: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::RankDeficient { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::Improper(_) | Error::PriorBound { .. } => 3,
            Error::Numerical(_) => 4,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
