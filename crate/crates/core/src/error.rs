use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    /// Structurally broken input (wrong arity, unparseable field). Lines are 1-based
    /// and count the header row.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A well-formed value that the schema does not admit.
    #[error("attribute {attribute:?}: value {value:?} is outside the declared domain")]
    Domain { attribute: String, value: String },

    #[error("schema: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested guarantee cannot hold on this input (e.g. k larger than the table).
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("empty table: {0}")]
    EmptyTable(String),

    /// Asked for an aggregate whose denominator is empty.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Exhaustive enumeration would exceed the configured state-space budget.
    #[error("state space too large: {0}")]
    Budget(String),

    /// Conditioning on an event the prior and mechanism give zero probability.
    #[error("zero-probability transcript: {0}")]
    ZeroProbability(String),

    #[error("config: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
