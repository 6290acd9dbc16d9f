use std::fmt;

use aordaz::{GlmError, HarnessError};

/// Process exit codes.
pub mod exit {
    pub const IO: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const RANK_DEFICIENT: u8 = 3;
    pub const NOT_CONVERGED: u8 = 4;
    pub const VERIFY_FAILED: u8 = 5;
}

/// A failure reported as one `error: …` line on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: exit::USAGE,
            message: message.into(),
        }
    }

    /// Prefixes the message with the flag it concerns.
    pub fn flag(flag: &str, message: impl fmt::Display) -> Self {
        Self::usage(format!("--{flag}: {message}"))
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            code: exit::IO,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // newlines would break the one-line contract
        write!(f, "{}", self.message.replace(['\n', '\r'], " "))
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::AllReplicationsFailed { .. } => CliError {
                code: exit::NOT_CONVERGED,
                message: e.to_string(),
            },
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<GlmError> for CliError {
    fn from(e: GlmError) -> Self {
        let code = match e {
            GlmError::RankDeficient { .. } => exit::RANK_DEFICIENT,
            GlmError::NotConverged { .. } | GlmError::UnconvergedFit => exit::NOT_CONVERGED,
            _ => exit::USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}
