use thiserror::Error;

/// Errors produced by the simulator and its analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A malformed input row, with the 1-based line it came from.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Input that parsed but violates a structural requirement.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("statistics error: {0}")]
    Stats(String),

    /// Tail regression requested with too few points above the cutoff.
    #[error("tail fit needs at least 10 points above x_min, got {n_tail}")]
    TooFewTailPoints { n_tail: usize },

    /// The pre-generated entrant pool ran dry before the schedule did.
    #[error("entrant pool exhausted on day {day}")]
    PoolExhausted { day: usize },

    #[error("simulation error: {0}")]
    Engine(String),
}

pub type Result<T> = std::result::Result<T, Error>;
