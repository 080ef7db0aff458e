//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by numerical operations in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument fell outside the mathematical domain of the function.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A point or rule was built for one dimension and used in another.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A tensor rule would materialize more nodes than the budget allows.
    #[error("node budget exceeded: {requested} nodes requested, limit {limit}")]
    NodeBudget { requested: u128, limit: u64 },

    /// A quadrature rule cannot integrate the requested polynomial degree.
    #[error("quadrature rule too coarse: exactness degree {available} < required {required}")]
    RuleTooCoarse { required: u32, available: u32 },

    /// Inverting the semigroup would amplify some coefficient beyond the cap.
    #[error(
        "semigroup inversion refused: amplification e^({degree}*{t}) exceeds guard {guard:.3e}"
    )]
    Amplification { degree: u32, t: f64, guard: f64 },

    /// An integrand returned a non-finite value at a quadrature node.
    #[error("non-finite integrand value {value} at node {node:?}")]
    NonFiniteIntegrand { value: f64, node: Vec<f64> },

    /// A black-box evaluator left the required range.
    #[error("evaluator for {name} returned {value} outside [0,1] at {node:?}")]
    RangeViolation {
        name: String,
        value: f64,
        node: Vec<f64>,
    },

    /// Derivative formulas diverge at t = 0 for indicator sources.
    #[error("derivatives of an indicator source diverge at t = 0; evolve with t > 0")]
    DivergentDerivative,

    /// No way to evaluate a gradient for this function.
    #[error("no gradient path for {name}: supply a closed-form gradient or pre-smooth via the semigroup")]
    NoGradientPath { name: String },

    /// Malformed configuration or argument combination.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// I/O failure while writing or reading an artifact.
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Serialization failure.
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
