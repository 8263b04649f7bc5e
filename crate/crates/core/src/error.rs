use thiserror::Error;

/// Errors raised by configuration validation and the design/simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("pattern space B^N = {phase_levels}^{n_elements} exceeds the cap of {cap} patterns")]
    TooManyPatterns {
        phase_levels: usize,
        n_elements: usize,
        cap: usize,
    },

    #[error("need {needed} distinct points, only {available} available")]
    NotEnoughPoints { needed: usize, available: usize },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("expected {expected} points for {bits}-bit labels, got {got}")]
    LabelLength {
        expected: usize,
        bits: u32,
        got: usize,
    },

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
