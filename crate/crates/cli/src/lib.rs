//! Batch driver: configuration parsing, task dispatch and report writing for
//! the `attrbounds` binary.

pub mod config;
pub mod tasks;

pub use config::{ConfigText, ExperimentConfig, Format, Task};
pub use tasks::{render, run, sweep, Artifact, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] attrbounds::Error),

    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for invalid input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        use attrbounds::Error as E;
        match self {
            CliError::Core(
                E::NoConvergence { .. } | E::CgStalled { .. } | E::NonFinite { .. } | E::RankDeficient { .. },
            ) => 2,
            _ => 1,
        }
    }
}
