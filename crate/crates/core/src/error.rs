use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("operator is not hermitian: relative deviation {0:e}")]
    NotHermitian(f64),
    #[error("operator is not positive: minimum eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("operators do not commute: relative commutator norm {0:e}")]
    NonCommuting(f64),
    #[error("invalid inclusion: {0}")]
    Inclusion(String),
    #[error("projections are not a complete orthogonal family: {0}")]
    Projections(String),
    #[error("basis is not orthonormal: Gram deviation {0:e}")]
    NotOrthonormal(f64),
    #[error("invalid interaction spec: {0}")]
    InvalidSpec(String),
    #[error("segment [{k}, {l}] is not contained in the chain")]
    SegmentOutOfRange { k: i64, l: i64 },
    #[error("dense dimension {dim} exceeds the limit {limit}")]
    DenseLimit { dim: usize, limit: usize },
    #[error("transfer matrix is not strictly positive: {0}")]
    TransferMatrix(String),
    #[error("operation requires a periodic chain")]
    NotPeriodic,
    #[error("state is not normalized: total mass {0}")]
    NotNormalized(f64),
    #[error("label {label} at site {site} has zero probability")]
    ZeroProbability { site: i64, label: String },
    #[error("invalid window: {0}")]
    Window(String),
    #[error("invalid generator parameters: {0}")]
    Params(String),
}

pub type Result<T> = std::result::Result<T, Error>;
