use std::fmt;

use rowex_core::Error as CoreError;

/// Everything the command line can fail with, each mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed files, invalid models or queries.
    Input(String),
    /// The data have probability zero under the model.
    Inference(String),
    /// At least one check report failed.
    CheckFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Inference(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// One-line JSON description written to standard error.
    pub fn to_json(&self) -> String {
        let kind = match self {
            CliError::Input(_) => "input",
            CliError::Inference(_) => "inference",
            CliError::CheckFailed(_) => "check",
        };
        serde_json::json!({ "error": kind, "exit_code": self.exit_code(), "message": self.to_string() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Inference(m) => f.write_str(m),
            CliError::CheckFailed(n) => write!(f, "{n} check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Inference(_) => CliError::Inference(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
