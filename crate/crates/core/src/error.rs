//! Library-wide error type.

use thiserror::Error;

/// Errors produced by automaton construction and distribution engines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A probability was negative, above one, or NaN.
    #[error("invalid probability {value} for {what}")]
    InvalidProbability { what: String, value: f64 },

    /// A row that must be stochastic does not sum to one.
    #[error("{what} sums to {sum}, expected 1 within {tol}")]
    NotStochastic { what: String, sum: f64, tol: f64 },

    /// A character is not part of the relevant alphabet.
    #[error("character {ch:?} not in alphabet {alphabet:?}")]
    UnknownCharacter { ch: char, alphabet: String },

    /// Two components that must share an alphabet do not.
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: String, right: String },

    /// An operation produced a value outside the declared value domain.
    #[error("operation {op} in state {state} produced {value} outside the value domain")]
    DomainOverflow {
        op: String,
        state: String,
        value: String,
    },

    /// A Markov chain failed a structural requirement (irreducibility, aperiodicity).
    #[error("chain is not {property}: {detail}")]
    ChainStructure { property: String, detail: String },

    /// An iteration did not converge within its cap.
    #[error("{what} did not converge within {iterations} iterations (residual {residual})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    /// A computation would exceed a resource guard.
    #[error(
        "resource guard: {what} needs {needed}, limit is {limit} (override with PAA_MAX_STATES)"
    )]
    ResourceLimit {
        what: String,
        needed: usize,
        limit: usize,
    },

    /// A pattern or spec string could not be parsed.
    #[error("parse error at position {position}: {detail}")]
    Parse { position: usize, detail: String },

    /// A syntactically valid feature that this implementation does not support.
    #[error("unsupported feature: {0}")]
    Unsupported(String),
}

/// Library-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Default cap on constructed automaton state spaces.
///
/// The environment variable `PAA_MAX_STATES` overrides it.
pub fn max_states() -> usize {
    std::env::var("PAA_MAX_STATES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1 << 20)
}
