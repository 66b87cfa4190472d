use thiserror::Error;

/// Errors raised by the numerical layers of the search engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MubError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is not Hermitian (max defect {max_defect:e})")]
    NotHermitian { max_defect: f64 },

    #[error("matrix is not unitary (max defect {max_defect:e})")]
    NotUnitary { max_defect: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("QR factorization is rank deficient at column {column} (pivot {pivot:e})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("expected {expected} values, got {actual}")]
    InvalidLength { expected: usize, actual: usize },

    #[error("non-finite residual when probing coordinate {coordinate:?}")]
    NonFinite { coordinate: Option<usize> },

    #[error("{0} is not prime")]
    NotPrime(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = MubError> = std::result::Result<T, E>;
