use thiserror::Error;

/// Errors produced by the active learning engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("instance {0} is already labeled")]
    AlreadyLabeled(usize),
    #[error("unknown instance id {0}")]
    UnknownId(usize),
    #[error("class index {index} out of range for {classes} classes")]
    UnknownClass { index: usize, classes: usize },
    #[error("training set is empty or too small")]
    EmptyTrainingSet,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid cluster count {k} for {n} instances")]
    InvalidK { k: usize, n: usize },
    #[error("margin requires at least two classes")]
    SingleClass,
    #[error("pool is empty")]
    EmptyPool,
    #[error("no scores to aggregate")]
    EmptySet,
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("rule base differs from the compiled-in table at row {row}, column {col}")]
    RuleBaseMismatch { row: usize, col: usize },
    #[error("simulated oracle needs ground truth for instance {0}")]
    GroundTruthMissing(usize),
    #[error("oracle unavailable: no expert input for pending instance {0}")]
    OracleUnavailable(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("session schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("instance {got} is not the pending query (pending: {pending:?})")]
    NotPending { pending: Option<usize>, got: usize },
    #[error("session is stopped")]
    Stopped,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
