use thiserror::Error;

pub type Result<T> = std::result::Result<T, CapacityError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapacityError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("reference marginal does not dominate row {row} (divergence is infinite)")]
    Domination { row: usize },

    #[error("entry {index} is negative or not finite: {value}")]
    InvalidEntry { index: usize, value: f64 },

    #[error("row {row}, column {col}: entry is negative or not finite ({value})")]
    InvalidMatrixEntry { row: usize, col: usize, value: f64 },

    #[error("sum {sum} is not within tolerance of 1")]
    NotNormalized { sum: f64 },

    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },

    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("alphabet too small: {0} symbols (need at least 2)")]
    AlphabetTooSmall(usize),

    #[error("prior must be strictly positive (entry {index} is {value})")]
    NonPositivePrior { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
