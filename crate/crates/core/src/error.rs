use thiserror::Error;

/// Errors produced by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: expected {expected}, got {actual}")]
    QubitMismatch { expected: usize, actual: usize },

    #[error("invalid Pauli label: {0:?}")]
    InvalidPauli(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("observable has no terms")]
    EmptyObservable,

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("{n} qubits exceeds the dense simulation limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("frontier grew to {0} terms, above the configured limit")]
    TermLimit(usize),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
