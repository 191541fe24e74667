//! CLI error classes mapped onto exit codes: usage and validation problems
//! exit 2, runtime failures and failed verification exit 1.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unparsable files, schema violations, invalid manifests.
    Usage(String),
    /// IO failures and errors raised while running the pipeline.
    Runtime(String),
    /// The pipeline ran, but a certified inequality failed.
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::VerifyFailed(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
            CliError::VerifyFailed(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

impl From<invit_core::Error> for CliError {
    fn from(e: invit_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
