use thiserror::Error;

/// Errors raised by matrix, channel, and optimizer operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix has a negative eigenvalue {value:.3e} (largest {max:.3e})")]
    NegativeEigenvalue { value: f64, max: f64 },

    #[error("matrix is zero")]
    ZeroMatrix,

    #[error("Kraus operator {index} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("operator is not positive semi-definite (min eigenvalue {min:.3e}, max {max:.3e})")]
    NotPsd { min: f64, max: f64 },

    #[error("{name} = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("objective operator annihilates the current channel")]
    ZeroMap,

    #[error("channel has no Kraus operators")]
    EmptyKraus,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
