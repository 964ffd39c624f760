use thiserror::Error;

use crate::coded::SolverState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is rank deficient (min/max diagonal ratio {ratio:.3e})")]
    Rank { ratio: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NotConverged { iterations: usize, estimate: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration of {count} subsets exceeds the capacity of {limit}")]
    Capacity { count: u128, limit: u128 },

    #[error("iteration diverged at t = {}", .state.t)]
    Divergence { state: Box<SolverState> },

    #[error("ciphertext does not match any group element (closest distance {distance:.3e})")]
    Closure { distance: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
