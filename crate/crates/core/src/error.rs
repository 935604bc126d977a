use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("class prior {0} is too close to 0.5: corrected losses divide by pi_plus - pi_minus")]
    DegeneratePrior(f64),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty data: {0}")]
    EmptyData(String),
    #[error("linear system is numerically singular")]
    SingularSystem,
    #[error("solver hit the iteration limit ({iterations}) with residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("quadratic program is infeasible: {0}")]
    InfeasibleProblem(String),
    #[error("class {0} has no samples")]
    MissingClass(i8),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("input is empty")]
    EmptyFile,
    #[error("row {line} has {found} columns, expected {expected}")]
    RaggedRows { line: usize, expected: usize, found: usize },
    #[error("label column holds {0} distinct values, expected at most 2")]
    NonBinaryLabels(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("constraints cannot be satisfied")]
    Infeasible,
    #[error("assignment is not a binary clustering")]
    NotBinary,
}

pub type Result<T> = std::result::Result<T, Error>;
