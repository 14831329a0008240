use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} is outside the ambient space (maximal occupation {ambient})")]
    Range { index: usize, ambient: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("operator `{0}` declares no growth profile, its tail is unbounded")]
    UnboundedTail(String),

    #[error("trusted region exhausted at commutator depth {depth}")]
    TrustExhausted { depth: usize },

    #[error("trusted region insufficient: {0}")]
    Untrusted(String),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("eigenvector matrix is not unitary (defect {0:e})")]
    NonUnitary(f64),

    #[error("series remainder cannot be certified: {0}")]
    Remainder(String),

    #[error("unknown site {0:?}")]
    UnknownSite(Vec<i64>),

    #[error("displacement defect {defect:e} exceeds tolerance {tolerance:e}")]
    DisplacementDefect { defect: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
