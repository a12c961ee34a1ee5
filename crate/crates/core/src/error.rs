use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shift is empty: every block was pruned")]
    EmptyShift,
    #[error("shift is not mixing: no power of the transition matrix up to {bound} is positive")]
    NotMixing { bound: usize },
    #[error("resource limit exceeded: {what} ({requested} > cap {cap})")]
    ResourceLimit {
        what: &'static str,
        requested: u128,
        cap: u128,
    },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid word {word:?}: {reason}")]
    InvalidWord { word: String, reason: String },
    #[error("invalid shift description: {0}")]
    InvalidSft(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("observation type does not match loss kind {kind}")]
    KindMismatch { kind: &'static str },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("non-finite loss value at step {step}")]
    NonFinite { step: usize },
    #[error("observation sequence has zero likelihood under every grid model")]
    InadmissibleObservation,
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
