use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Variants map onto the kind of failure a caller can act on: malformed input,
/// an out-of-range parameter, or input that is well-formed but degenerate for
/// the requested statistic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("class {class} too small: {size} point(s), need at least {min}")]
    ClassTooSmall {
        class: usize,
        size: usize,
        min: usize,
    },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("class pair ({a}, {b}): {source}")]
    Pair {
        a: usize,
        b: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("workflow error: {0}")]
    Workflow(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True when the failure is a property of the input data rather than of
    /// the arguments (used by the CLI to pick exit codes).
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::NonFinite { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
