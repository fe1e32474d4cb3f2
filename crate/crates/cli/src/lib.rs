//! Experiment configuration and the subcommands behind the `secure-congest`
//! binary.

pub mod commands;
pub mod config;

use std::fmt;

use secure_congest::Error;

/// A failed command; [`CliError::exit_code`] is the process status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Precondition(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Precondition(m) => write!(f, "precondition failed: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NotTwoVertexConnected | Error::Disconnected { .. } | Error::Bridge(..) | Error::Structural(_) => {
                CliError::Precondition(msg)
            }
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Length { .. } | Error::Budget { .. } | Error::Refused(_) => {
                CliError::Config(msg)
            }
            _ => CliError::Internal(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
