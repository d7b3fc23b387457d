use std::fmt;

/// Error surfaced to the shell, grouped by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or malformed input (exit 2).
    Input(String),
    /// Well-formed input that violates a precondition (exit 3).
    Domain(String),
    /// Anything else (exit 4).
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Domain(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Failure::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Failure::Domain(msg.into())
    }

    /// Prefixes the message with some context, keeping the category.
    pub fn context(self, what: impl fmt::Display) -> Self {
        match self {
            Failure::Input(m) => Failure::Input(format!("{what}: {m}")),
            Failure::Domain(m) => Failure::Domain(format!("{what}: {m}")),
            Failure::Internal(m) => Failure::Internal(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Domain(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

impl From<drtk::Error> for Failure {
    fn from(e: drtk::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;
