use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The variants map onto the process exit codes used by the command-line
/// front end (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{what}: {size} exceeds the limit of {limit}")]
    OverLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// 0 success, 2 config error, 3 budget error, 4 invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OverLimit { .. } | Error::Budget(_) => 3,
            Error::Invariant(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left, right })
    }
}
