//! Experiment harness for `gpcb-core`.
//!
//! Reads a TOML experiment description ([`config`]), executes runs in
//! parallel ([`experiment`]), summarises them ([`aggregate`]) and writes
//! CSV results plus a metadata sidecar ([`output`]). The [`commands`]
//! module holds one entry point per CLI subcommand.

use std::path::PathBuf;

use thiserror::Error;

pub mod aggregate;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod output;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Config {
        path: PathBuf,
        source: config::ConfigError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Ingest {
        path: PathBuf,
        source: gpcb_core::problems::IngestError,
    },
    #[error("{}: {message}", path.display())]
    Table { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("numerical failure: {0}")]
    Core(#[from] gpcb_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} runs failed; see results.csv")]
    RunsFailed { failed: usize, total: usize },
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config { .. } | HarnessError::Usage(_) => 2,
            HarnessError::Io { .. }
            | HarnessError::Ingest { .. }
            | HarnessError::Table { .. }
            | HarnessError::Csv { .. } => 1,
            HarnessError::Core(_) | HarnessError::RunsFailed { .. } => 3,
        }
    }
}
