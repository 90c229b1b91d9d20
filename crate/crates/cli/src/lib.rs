//! Experiment driver for the `rkcq` library: run configuration, the
//! subcommands behind the `rkcq` binary, CSV output and SVG plots.

pub mod commands;
pub mod config;
pub mod plot;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<rkcq::Error> for CliError {
    fn from(e: rkcq::Error) -> Self {
        match e {
            rkcq::Error::Config(m) => CliError::Config(m),
            rkcq::Error::UnknownTableau(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o: {e}"))
    }
}
