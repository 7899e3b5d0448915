use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("robot {robot}: infeasible trajectory at t={t}: {reason}")]
    Infeasible { robot: usize, t: u32, reason: String },

    #[error("planning failed for robot {robot}: {reason}")]
    Planning { robot: usize, reason: String },

    #[error("joint search space of {estimate:.3e} combinations exceeds the budget of {budget}")]
    BudgetExceeded { estimate: f64, budget: u64 },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
