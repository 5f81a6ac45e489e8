use thiserror::Error;

/// Errors produced by the selection pipeline.
///
/// Row and column positions carried by variants are 1-based, matching the
/// indexing used in every user-facing report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains no observations or no variables")]
    EmptyInput,

    #[error("row {row} has {got} columns, expected {expected}")]
    NonRectangular { row: usize, expected: usize, got: usize },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("variable index {index} is outside 1..={p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("k = {k} exceeds the number of observations ({n})")]
    KTooLarge { k: usize, n: usize },

    #[error("only {distinct} distinct rows, cannot form {k} clusters")]
    DegenerateData { distinct: usize, k: usize },

    #[error("neighbour count r = {r} exceeds the number of observations ({n})")]
    RTooLarge { r: usize, n: usize },

    #[error("exhaustive search would evaluate more than {limit} subsets")]
    TooManySubsets { limit: u64 },

    #[error("no subset with at most {cap} variables attains the threshold (best {best_matches}/{n})")]
    ThresholdUnreachable { cap: usize, best_matches: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
