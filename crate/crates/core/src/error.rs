use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {n} is below the first valid index {n_start} of the sequence")]
    IndexBelowStart { n: u64, n_start: u64 },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("cannot parse sequence notation {input:?}: {reason}")]
    SequenceParse { input: String, reason: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("query point has a non-finite coordinate")]
    NonFiniteQuery,

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("operation requires the {expected} variant, configuration uses {actual}")]
    WrongVariant {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("averaged iterate requested before any averaging update")]
    EmptyAverage,

    #[error("shifted Hessian is not invertible as required: {0}")]
    SingularShift(String),

    #[error("no regime covers this configuration: {0}")]
    Unclassifiable(String),

    #[error("assumption validation failed; pass the override flag to run anyway")]
    ValidationFailed,

    #[error("every replication diverged")]
    AllDiverged,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("slope diagnostic needs at least {needed} usable snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
