//! Command-line front end: corpus files, configuration and the `fit`,
//! `build-db`, `match`, `metrics` and `demo` commands.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod synth;

use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or argument values.
    #[error("{0}")]
    Usage(String),
    /// The inputs could not be processed.
    #[error(transparent)]
    Data(#[from] gesture_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(e) => e.kind(),
        }
    }

    /// Single tab-separated line: `error`, kind, message.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\t'], " ");
        format!("error\t{}\t{}", self.kind(), msg)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}
