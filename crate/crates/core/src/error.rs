use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid sparse-grid configuration: level {level} < dimension {dimension}")]
    LevelBelowDimension { level: u32, dimension: usize },

    #[error("multi-index {0:?} is not stored in the grid's index sets")]
    UnknownMultiIndex(Vec<u32>),

    #[error("matrix of size {size} is not positive definite (pivot {pivot} failed at jitter {jitter:.3e})")]
    NotPositiveDefinite {
        size: usize,
        pivot: usize,
        jitter: f64,
    },

    #[error("subdomain {index:?} could not be factorized: {source}")]
    SubdomainFactorization {
        index: Vec<u32>,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("conjugate gradient diverged: non-finite value at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("need at least {min} replicates, got {got}")]
    NotEnoughReplicates { min: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
