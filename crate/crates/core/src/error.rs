use thiserror::Error;

/// Violation of one of the input invariants checked before a run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("weights sum to {sum}, expected 1 (absolute tolerance 1e-9)")]
    WeightSum { sum: f64 },
    #[error("weight {index} = {value} lies outside [0, 1]")]
    WeightRange { index: usize, value: f64 },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("analysis period is empty")]
    EmptyPeriod,
    #[error("analysis period must be strictly increasing (index {0} repeats or goes backwards)")]
    PeriodNotIncreasing(usize),
    #[error("analysis period index {index} is out of range for series length {len}")]
    PeriodOutOfRange { index: usize, len: usize },
    #[error("rotation variable set is empty")]
    EmptyRotationVariables,
    #[error("rotation variable {index} is out of range for {count} variables")]
    RotationVariableOutOfRange { index: usize, count: usize },
    #[error("rotation variable {0} is listed twice")]
    DuplicateRotationVariable(usize),
    #[error("query has {0} missing cells")]
    QueryMissingCells(usize),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid filtering: {0}")]
    InvalidFiltering(String),
    #[error("worker count must be positive")]
    ZeroWorkers,
}
