//! Experiment harness: task sampling, trial execution, aggregation and the
//! map-size, task-difficulty and label-density comparisons.

mod config;
mod report;
mod run;
mod sample;

use std::path::Path;

use thiserror::Error;

use crate::floorplan::{GraphError, MapError, TransformError};
use crate::sim::SimError;
use crate::vlm::{PromptError, QueryError};
pub use config::{DifficultyFilter, ExperimentConfig, MapSpec};
pub use report::{
    hypothesis_report, success_rate, ArmSummary, Comparison, GroupKey, HypothesisReport, HypothesisResult, RateRow,
    ReportOptions,
};
pub use run::{load_records, run_experiment, write_records, Experiment, PreparedMap, TrialRecord};
pub use sample::{derive_seed, qualifying_tasks, sample_tasks};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("map `{map}` has {available} available {difficulty} task(s), {requested} requested")]
    NotEnoughTasks {
        map: String,
        difficulty: &'static str,
        requested: usize,
        available: usize,
    },
    #[error("bad record file: {0}")]
    Records(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

impl BenchError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
