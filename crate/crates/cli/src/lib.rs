//! Command-line front end for `transma`: CSV ingestion, JSON run
//! configuration, simulation and holdout runs, and byte-stable result
//! tables.

pub mod config;
pub mod ingest;
pub mod run;
pub mod table;

pub use config::{FitConfig, ScaledMspeConfig, SimConfig, Sweep};
pub use ingest::{ingest_csv, standardize, write_domain_csv, IngestError};
pub use run::{execute, run, Command, Format, RunManifest};
pub use table::{Cell, Table};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Ingest(#[from] IngestError),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

impl From<transma_core::Error> for CliError {
    fn from(e: transma_core::Error) -> Self {
        use transma_core::Error as E;
        match e {
            E::ConfigInvalid(_)
            | E::InvalidInput(_)
            | E::DimensionMismatch(_)
            | E::MissingTarget
            | E::UnknownId(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
