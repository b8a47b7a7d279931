use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed network file: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("{what} exceeds the configured cap of {cap} (bound {bound})")]
    CapExceeded {
        what: &'static str,
        cap: u128,
        bound: u128,
    },

    #[error("infeasible state: {0}")]
    InfeasibleState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear solve failed: {message} (backward error {backward_error:.3e}, condition estimate {condition:.3e})")]
    Solver {
        message: String,
        backward_error: f64,
        condition: f64,
    },

    #[error("simulation error: {0}")]
    Simulation(String),
}

impl Error {
    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Schema(_) => "schema",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::InfeasibleState(_) => "infeasible_state",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Unsupported(_) => "unsupported",
            Error::Solver { .. } => "solver",
            Error::Simulation(_) => "simulation",
        }
    }

    /// Process exit code: 2 for input errors, 3 for resource caps, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Json(_)
            | Error::Schema(_)
            | Error::InfeasibleState(_)
            | Error::InvalidArgument(_)
            | Error::Unsupported(_) => 2,
            Error::CapExceeded { .. } => 3,
            Error::Solver { .. } | Error::Simulation(_) => 1,
        }
    }
}
