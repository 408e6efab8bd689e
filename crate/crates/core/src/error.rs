//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Sampled or loaded values do not form a valid excursion grid.
    /// `index` names the first offending grid point.
    #[error("invalid excursion at grid index {index}: {reason}")]
    InvalidExcursion { index: usize, reason: String },

    /// An input file could not be read or parsed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A distortion profile failed its monotonicity or positivity check.
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    /// A required index is missing from a metric subsample.
    #[error("index {0} is not in the subsample")]
    MissingIndex(usize),

    /// An internal invariant was violated; indicates a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
