use thiserror::Error;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    General = 1,
    Ingest = 2,
    Features = 3,
    Evaluate = 4,
    Train = 5,
    PortInUse = 6,
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.code as i32
    }
}

/// Attaches an exit code to any displayable error.
pub trait OrExit<T> {
    fn or_exit(self, code: ExitCode, context: &str) -> Result<T, CliError>;
}

impl<T, E: std::fmt::Display> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: ExitCode, context: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(code, format!("{context}: {e}")))
    }
}
