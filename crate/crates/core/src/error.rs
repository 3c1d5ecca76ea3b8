use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum TutorError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A combinatorial size cap was exceeded.
    #[error("{what} = {value} exceeds the supported maximum of {max}")]
    SizeLimit {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("feedback probabilities at `{key}` sum to {sum}, expected 1")]
    Unnormalized { key: String, sum: f64 },

    #[error("model has no entry for `{key}`")]
    MissingEntry { key: String },

    #[error("value {value} at `{key}` lies outside [{lo}, {hi}]")]
    OutOfRange {
        key: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Two candidate values tie at a decision slot, so the exploration
    /// constant `4 / gap^2` is undefined.
    #[error("zero gap at slot {slot} for context {context}")]
    ZeroGap { context: usize, slot: usize },

    #[error("best-first argmax depends on feedback history for context {context}: {detail}")]
    Assumption1 { context: usize, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = TutorError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> TutorError {
    TutorError::InvalidArgument(msg.into())
}
