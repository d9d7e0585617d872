//! Scenario-driven experiment runner behind the `syzygy` binary.

pub mod commands;
pub mod output;
pub mod scenario;

use std::path::PathBuf;

pub use commands::{run_command, Command, RunOutcome, Status};
pub use output::{Manifest, OutputDir};
pub use scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("scenario: {0}")]
    Scenario(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] syzygy_core::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}
