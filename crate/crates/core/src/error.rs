//! Error types.

use thiserror::Error;

use crate::graded_algebra::ValidationReport;

/// Failures while reading text input.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed rational `{0}`")]
    Rational(String),
    #[error("json error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("validation failed: {0}")]
    Validation(AlgebraError),
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for ParseError {
    fn from(e: csv::Error) -> Self {
        ParseError::Csv(e.to_string())
    }
}

/// Errors raised by algebra constructors and algebraic operations.
#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("structure table is not a graded Lie algebra:\n{0}")]
    Invalid(ValidationReport),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("layer {layer} out of range 1..={step}")]
    LayerRange { layer: usize, step: usize },
    #[error("index {0} out of range")]
    Index(usize),
    #[error("{0}")]
    Unsupported(String),
    #[error("dilation factor must be positive")]
    NonPositiveDilation,
    #[error("algebras do not match: {0}")]
    Mismatch(String),
}

/// Errors raised when working with homogeneous subalgebras and morphisms.
#[derive(Debug, Error)]
pub enum SubgroupError {
    #[error("span is not dilation invariant: projection {projection:?} of a spanning vector escapes it")]
    NotHomogeneous { projection: Vec<String> },
    #[error("span is not a subalgebra: bracket {bracket:?} escapes it")]
    NotSubalgebra { bracket: Vec<String> },
    #[error("subalgebra is not an ideal")]
    NotIdeal,
    #[error("map is not an h-homomorphism: {0}")]
    NotHHomomorphism(String),
    #[error("hypotheses violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Failures of numerical solvers.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("differential is singular at the base point")]
    Singular,
    #[error("no convergence within {iterations} iterations (residual {residual:e}) at {at:?}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        at: Vec<f64>,
    },
    #[error("point {0:?} leaves the domain")]
    Domain(Vec<f64>),
    #[error("differential does not have the required type: {0}")]
    Differential(String),
    #[error("not enough samples: {0}")]
    Samples(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Subgroup(#[from] SubgroupError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
