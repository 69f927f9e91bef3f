//! Scenario configuration, the run loop, logs, reports, rescoring,
//! comparison and batches.

pub mod batch;
pub mod compare;
pub mod config;
pub mod log;
pub mod report;
pub mod rescore;
pub mod run;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use batch::{run_batch, BatchIndex, CellResult};
pub use compare::{compare, Comparison};
pub use config::{BatchSpec, RunConfig, WeatherSpec};
pub use log::{parse_log, write_log, TickRecord};
pub use report::{write_outputs, Report};
pub use rescore::{rescore_log, rescore_records, rescore_report, RescoreContext};
pub use run::{connect_agent, run_config, run_scenario, RunOutcome, Termination};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Weather(#[from] crate::weather::WeatherError),
    #[error(transparent)]
    Road(#[from] crate::road::RoadError),
    #[error(transparent)]
    Spawn(#[from] crate::traffic::SpawnError),
    #[error(transparent)]
    Agent(#[from] crate::agent::AgentError),
    #[error(transparent)]
    Scoring(#[from] crate::scoring::ScoringError),
    #[error("log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error("report {}: {message}", path.display())]
    Report { path: PathBuf, message: String },
    #[error("compare: {0}")]
    Compare(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl HarnessError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
