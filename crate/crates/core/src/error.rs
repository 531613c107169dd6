use std::io;

use thiserror::Error;

/// Errors raised across the recovery toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not orthonormal (max deviation of U^T U from I: {max_deviation:.3e})")]
    NotOrthonormal { max_deviation: f64 },

    #[error("subset budget exceeded: C({m}, {s}) = {count} > {budget}; use delta_sampled instead")]
    BudgetExceeded {
        m: usize,
        s: usize,
        count: u128,
        budget: u128,
    },

    #[error("restricted isometry constant for S = {0} is missing from the report")]
    MissingDelta(usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
