use std::fmt;

/// CLI failure with its process exit code: 2 for validation/configuration
/// problems, 3 for numeric or sampler-starvation failures.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 2 }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 3 }
    }
}

impl From<latentrw::Error> for CliError {
    fn from(e: latentrw::Error) -> Self {
        use latentrw::Error as E;
        let code = match e {
            E::Config(_) | E::Contract(_) => 2,
            E::Numeric(_) | E::Starvation { .. } | E::Degenerate(_) | E::Divergence { .. } => 3,
        };
        CliError { message: e.to_string(), code }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(format!("io error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
