use thiserror::Error;

/// Errors produced while assembling or running a problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid sampling: {0}")]
    InvalidSampling(String),

    #[error("atom enumeration would produce {atoms} subsets, above the cap {cap}; use the Monte Carlo path")]
    AtomCapExceeded { atoms: u128, cap: u128 },

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    DataFormat {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("diagnostic history was not recorded for this run")]
    HistoryUnavailable,

    #[error("diagnostic iteration cap {0} exceeded")]
    DiagnosticCapExceeded(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
