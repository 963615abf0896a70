use thiserror::Error;

use crate::sequence::{Symbol, MAX_ORDER};

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("window of {len} symbols at position {position} is out of range for a sequence of length {seq_len}")]
    OutOfBounds {
        position: usize,
        len: usize,
        seq_len: usize,
    },

    #[error("tuple length {order} exceeds sequence length {len}")]
    OrderTooLarge { order: usize, len: usize },

    #[error("tuple length must be at least 1")]
    ZeroOrder,

    #[error("context order {0} exceeds the supported maximum of {MAX_ORDER}")]
    UnsupportedOrder(usize),

    #[error("{width}-tuples over an alphabet of {alphabet_size} symbols do not fit a 64-bit key")]
    KeyOverflow { alphabet_size: usize, width: usize },

    #[error("symbol id {id} outside alphabet of size {alphabet_size}")]
    SymbolOutOfRange { id: Symbol, alphabet_size: usize },

    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,

    #[error("duplicate symbol {0:?} in alphabet")]
    DuplicateSymbol(String),

    #[error("token {0:?} is not in the declared token list")]
    UnknownToken(String),

    #[error("context {context:?} is unreachable (zero marginal probability)")]
    ZeroContext { context: Vec<Symbol> },

    #[error("zero-probability event at tuple {tuple:?}")]
    ZeroProbability { tuple: Vec<Symbol> },

    #[error("reverse context {tuple:?} has zero marginal probability")]
    ZeroDenominator { tuple: Vec<Symbol> },

    #[error("order mismatch: expected {expected}, found {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("alphabet size mismatch: expected {expected}, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },

    #[error("{what} sums to {sum} instead of 1")]
    NotNormalized { what: String, sum: f64 },

    #[error("invalid probability {value} at {what}")]
    InvalidProbability { what: String, value: f64 },

    #[error("joint distribution is not stationary (leading/trailing marginal gap {deviation:e}); the boundary identity needs position-independent tuple marginals")]
    NotStationary { deviation: f64 },

    #[error("power iteration did not converge after {iterations} iterations; the chain is likely reducible or periodic")]
    NoConvergence { iterations: usize },

    #[error(
        "distribution is not stationary for the transition matrix (max |πP - π| = {residual:e})"
    )]
    NotStationaryFor { residual: f64 },

    #[error("smoothing must be finite and non-negative, got {0}")]
    InvalidSmoothing(f64),

    #[error("threshold must be positive, got {0}")]
    InvalidThreshold(f64),

    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
