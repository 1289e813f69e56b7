use thiserror::Error;

use crate::lp::LpError;
use crate::metrics::MetricsError;
use crate::network::NetworkError;
use crate::optimizer::OptimizerError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    /// True for failures of the solver rather than of the inputs.
    pub fn is_solve_failure(&self) -> bool {
        matches!(
            self,
            Error::Optimizer(OptimizerError::Solve { .. } | OptimizerError::Invariant { .. }) | Error::Lp(LpError::NotOptimal(_))
        )
    }
}
