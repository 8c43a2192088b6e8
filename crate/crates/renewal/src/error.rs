//! Crate-wide error type.

use crate::types::RenewalFlag;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("batch must contain at least one row")]
    EmptyBatch,

    #[error("row {row} has {got} values but the schema defines {expected} attributes")]
    RowWidth {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("attribute '{name}' is binary but row {row} holds {value}")]
    NonBinaryValue {
        name: String,
        row: usize,
        value: f64,
    },

    #[error("attribute '{name}' holds a non-finite value at row {row}")]
    NonFiniteValue { name: String, row: usize },

    #[error("timestamps must be non-decreasing (violated at row {row})")]
    TimestampOrder { row: usize },

    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("operation needs at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("value {value} is not a valid binary entry (expected 0 or 1)")]
    NonBinaryEntry { value: f64 },

    #[error("batches have different schemas")]
    SchemaMismatch,

    #[error("all inclusion weights are zero; aggregate similarity is undefined")]
    AllWeightsZero,

    #[error("aligned window of {rows} row(s) is too short for numeric attribute '{name}'")]
    WindowTooShort { name: String, rows: usize },

    #[error("loss inputs must be non-negative, got {0}")]
    NegativeLoss(f64),

    #[error("label must be -1 or +1, got {0}")]
    BadLabel(f64),

    #[error("feature width {got} does not match the model's width {expected}")]
    FeatureWidth { got: usize, expected: usize },

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("training diverged; reduce the learning rate or the ridge weight")]
    TrainingDiverged,

    #[error("model was trained on a different schema")]
    ModelSchemaMismatch,

    #[error("snapshot version {0} is not supported")]
    SnapshotVersion(u32),

    #[error("snapshot was taken under a different schema")]
    SnapshotSchemaMismatch,

    #[error("training failed while applying flag {flag}: {source}")]
    Apply {
        flag: RenewalFlag,
        #[source]
        source: Box<Error>,
    },

    #[error("both classes must be present to compute AUC")]
    SingleClass,

    #[error("baseline metric must be positive, got {0}")]
    NonPositiveBaseline(f64),

    #[error("records and trajectory disagree at position {position}")]
    InconsistentIndices { position: usize },

    #[error("invalid stream spec: {0}")]
    InvalidStreamSpec(String),

    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: u64, message: String },

    #[error("column '{name}' is missing from the schema sidecar")]
    MissingSidecarEntry { name: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
