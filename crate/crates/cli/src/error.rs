use std::fmt;

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid data, rejected records or failed scoring (exit 1).
    Validation,
    /// Bad arguments, configuration or missing inputs (exit 2).
    Config,
    /// The completion endpoint failed (exit 3).
    Endpoint,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Config => 2,
            ErrorKind::Endpoint => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn new(kind: ErrorKind, error: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind,
            error: error.into(),
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::new(ErrorKind::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn invalid(msg: impl fmt::Display) -> Self {
        CliError::new(ErrorKind::Validation, anyhow::anyhow!("{msg}"))
    }
}

/// Tags a fallible result with an exit class.
pub trait OrExit<T> {
    fn or_config(self) -> Result<T, CliError>;
    fn or_invalid(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_config(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(ErrorKind::Config, e))
    }

    fn or_invalid(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(ErrorKind::Validation, e))
    }
}
