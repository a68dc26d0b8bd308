//! Experiment drivers that turn a [`RunConfig`] into [`ResultTable`]s, plus the
//! command-line front end used by the `superres` binary.

pub mod cli;
mod commands;
pub mod config;
pub mod data;
pub mod table;

pub use commands::*;
pub use config::RunConfig;
pub use table::{Cell, Column, ColumnFormat, ResultTable, TableMeta};

use crate::error::Error;

/// Environment variable selecting the worker-thread count; unset means automatic.
pub const THREADS_ENV: &str = "SUPERRES_THREADS";

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Numeric(_) => 4,
            RunError::Io(_) => 5,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain(_) | Error::DegenerateDevice { .. } => RunError::Config(msg),
            Error::QuadratureNotConverged { .. } | Error::UndefinedEstimate(_) => RunError::Numeric(msg),
            Error::InsufficientData { .. }
            | Error::GridMismatch(_)
            | Error::DegenerateInput(_)
            | Error::UncorrectableBand { .. }
            | Error::Parse(_) => RunError::Data(msg),
        }
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`]. Returns the requested count.
pub fn init_thread_pool() -> Result<Option<usize>, RunError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RunError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool that is already configured keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
