//! File formats, configuration, batch jobs and the command-line front end
//! around [`emholo_core`].

use std::path::PathBuf;

pub mod config;
pub mod ctf;
pub mod job;
pub mod mrc;
pub mod plot;
pub mod raster;
pub mod simulate;
pub mod sweep;
pub mod units;

pub use emholo_core as core;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: byte {offset}: {reason}")]
    Format { path: String, offset: u64, reason: String },
    #[error("{source_name}:{line}: {reason}")]
    Config {
        source_name: String,
        line: usize,
        reason: String,
    },
    #[error("{0}")]
    Value(String),
    #[error(transparent)]
    Core(#[from] emholo_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
