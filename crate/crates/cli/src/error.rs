use thiserror::Error;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] lnnd_core::Error),
    #[error("statistical check failed: {0}")]
    Statistical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use lnnd_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(E::NonConvergence { .. } | E::Underflow { .. }) => 2,
            CliError::Core(_) => 1,
            CliError::Statistical(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
