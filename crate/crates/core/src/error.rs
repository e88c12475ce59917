use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty {0}")]
    Empty(String),

    /// A malformed input cell, addressed by 1-based data row and column name.
    #[error("row {row}, column '{column}': {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("numerically singular system: {0}")]
    Singular(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical solver rather than of the input data.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Singular(_) | Error::Solver(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
