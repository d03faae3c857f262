use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {allowed}")]
    Domain {
        what: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("matrix is not Hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),

    #[error(
        "transformed variance {value:.3e} at index {index} is not positive; \
         project the correlation onto the PSD cone before computing the coding gain"
    )]
    NonPositiveVariance { index: usize, value: f64 },

    #[error("linear system is singular")]
    Singular,

    #[error("orthogonalization lost rank at column {column} (residual ratio {ratio:.3e})")]
    RankLoss { column: usize, ratio: f64 },

    #[error("coarse AoA search gave up after {draws} draws; lower the threshold t")]
    CoarseSearchExhausted { draws: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
