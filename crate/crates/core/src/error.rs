use thiserror::Error;

/// Errors raised by the numerics, samplers and engines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(u32),

    #[error("argument `{name}` out of domain: {detail}")]
    Domain { name: &'static str, detail: String },

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("{what} underflows below the representable range (ln value {ln_value})")]
    Underflow { what: &'static str, ln_value: f64 },

    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed input at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            name,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
