mod commands;
mod config;
mod fd;
mod output;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use config::Cli;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] densgrad::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
    #[error("{failed} self-test check(s) failed")]
    SelfTest { failed: usize },
}

impl CliError {
    /// 1 for numeric failures, 2 for everything the caller can fix.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 1,
            CliError::SelfTest { .. } => 1,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("densgrad: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
