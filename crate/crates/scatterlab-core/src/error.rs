//! Crate-wide error type.

/// Errors produced by group arithmetic, frame construction, propagation and
/// bound certification.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("group mismatch: expected {expected}, got {found}")]
    GroupMismatch { expected: String, found: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("not a partition of the dual group: overlapping {overlapping:?}, missing {missing:?}")]
    InvalidPartition {
        overlapping: Vec<usize>,
        missing: Vec<usize>,
    },

    #[error("degenerate filter bank: {0}")]
    DegenerateBank(String),

    #[error("frame condition violated: {0}")]
    FrameViolation(String),

    #[error(
        "path budget exceeded at depth {depth}: {required} path evaluations exceed budget {budget}"
    )]
    BudgetExceeded {
        depth: usize,
        required: u128,
        budget: u64,
    },

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("operator norm {norm} exceeds 1")]
    NotContractive { norm: f64 },

    #[error("mismatched experiment metadata: {0}")]
    MetadataMismatch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
