//! Error type shared across the crate.
//!
//! Every fallible operation reports a structured error; nothing panics on bad
//! input and no partial results are returned.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, MochaError>;

/// Unified error for all modules.
#[derive(Debug, thiserror::Error)]
pub enum MochaError {
    /// Shape or size of an input does not match what the operation requires.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A configuration value violates its documented range or divisibility rule.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A motif graph cannot be built, e.g. fewer than two nodes in a group.
    #[error("degenerate group: {0}")]
    DegenerateGroup(String),

    /// Malformed serialized data. `offset` is the byte position of the problem.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// A numeric argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite or otherwise unusable numbers were produced or supplied.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A matrix operation failed, e.g. inverting a singular intrinsics matrix.
    #[error("matrix error: {0}")]
    Matrix(String),

    /// Evaluation was asked for but no pixel survives the validity mask.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A structured container (pyramid, volume, feature set) is inconsistent.
    #[error("structure error: {0}")]
    Structure(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl MochaError {
    /// Shorthand used by the parsers.
    pub fn format_at(offset: usize, message: impl Into<String>) -> Self {
        MochaError::Format {
            offset,
            message: message.into(),
        }
    }
}
