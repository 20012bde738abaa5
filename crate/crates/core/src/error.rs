use thiserror::Error;

/// Errors raised by the library.
///
/// Validation failures (bad shapes, out-of-range parameters, malformed
/// configuration) are distinguished from runtime failures (I/O, numerical
/// breakdown) so the CLI can map them onto different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension 2^{n} exceeds the configured maximum 2^{max}")]
    TooLarge { n: u32, max: u32 },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Parse(String),

    #[error("matrix is numerically singular (not positive definite)")]
    Singular,

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for input and configuration problems, false for runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotPowerOfTwo(_)
                | Error::TooLarge { .. }
                | Error::ShapeMismatch { .. }
                | Error::InvalidParameter(_)
                | Error::Config(_)
                | Error::Parse(_)
        )
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
