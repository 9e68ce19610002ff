use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Nmf2Error {
    #[error("matrix has a negative entry {value} at ({row}, {col})")]
    NegativeInput { row: usize, col: usize, value: f64 },
    #[error("matrix is entirely zero")]
    EmptyMatrix,
    #[error("invalid matrix shape: {0}")]
    Shape(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("subspace iteration did not converge after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("dominant singular pair has mixed signs; input is reducible")]
    ReducibleInput,
    #[error("both columns of the least-squares design matrix are zero")]
    DegenerateColumns,
    #[error("dominant singular vectors are not strictly positive")]
    NonpositiveDominant,
    #[error("(t1, t2) = ({t1}, {t2}) lies outside the feasible box")]
    OutOfBox { t1: f64, t2: f64 },
    #[error("angles violate the feasible intervals: {0}")]
    InfeasibleAlpha(String),
    #[error("three-way parameters violate the feasible ordering: {0}")]
    InfeasibleParams(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not of rank two within tolerance (mismatch {0:e})")]
    NotRank2(f64),
    #[error("rank-2 truncation is not nonnegative")]
    NotNonnegativeRank2,
    #[error("factor column {column} collapsed to zero")]
    DegenerateFactor { column: usize },
    #[error("rejection sampling gave up after {0} attempts")]
    RejectionLimit(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Nmf2Error {
    /// Whether the error stems from bad input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Nmf2Error::NegativeInput { .. }
                | Nmf2Error::EmptyMatrix
                | Nmf2Error::Shape(_)
                | Nmf2Error::NonFinite { .. }
                | Nmf2Error::InvalidParameter(_)
                | Nmf2Error::Parse { .. }
                | Nmf2Error::Io(_)
                | Nmf2Error::NotSymmetric(_)
                | Nmf2Error::NotRank2(_)
                | Nmf2Error::NotNonnegativeRank2
        )
    }
}

impl From<std::io::Error> for Nmf2Error {
    fn from(e: std::io::Error) -> Self {
        Nmf2Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Nmf2Error>;
