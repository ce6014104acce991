use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) is outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value encountered")]
    NonFinite,

    /// Zero pivot during sparse factorization; `column` is the elimination step.
    #[error("sparse LU: singular pivot at elimination step {column}")]
    SingularPivot { column: usize },

    /// The projected Hessenberg matrix could not be inverted.
    #[error("Krylov breakdown: projected matrix numerically singular at pivot {pivot}")]
    Breakdown { pivot: usize },

    #[error("starting vector is zero")]
    ZeroVector,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
