//! The `mensa` command line: `simulate`, `train`, `predict`, `evaluate`.
//!
//! Exit codes: 0 on success, 2 for usage/validation problems, 3 for
//! numerical failures (a training run that produced non-finite values).
//! Logging verbosity follows `MENSA_LOG_LEVEL` (error | info | debug).

mod commands;
mod config;

pub use commands::{cmd_evaluate, cmd_predict, cmd_simulate, cmd_train, load_trained_model};
pub use commands::{EvaluateArgs, PredictArgs, SimulateArgs, TrainArgs, TrainedModel};
pub use config::RunConfig;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<crate::data::DataError> for CliError {
    fn from(e: crate::data::DataError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<crate::simulate::SimError> for CliError {
    fn from(e: crate::simulate::SimError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<crate::model::ModelError> for CliError {
    fn from(e: crate::model::ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<crate::train::TrainError> for CliError {
    fn from(e: crate::train::TrainError) -> Self {
        match e {
            err @ crate::train::TrainError::Aborted { .. } => CliError::Numeric(err.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<crate::metrics::MetricError> for CliError {
    fn from(e: crate::metrics::MetricError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<crate::kv::KvError> for CliError {
    fn from(e: crate::kv::KvError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mensa",
    version,
    about = "Multi-event survival analysis: simulate, train, predict, evaluate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic survival dataset with dependent censoring
    Simulate(SimulateArgs),
    /// Train a model from a run-config file
    Train(TrainArgs),
    /// Write survival curves and median times for a dataset
    Predict(PredictArgs),
    /// Compute the evaluation metric suite for a trained model
    Evaluate(EvaluateArgs),
}

impl Cli {
    pub fn run(&self) -> Result<(), CliError> {
        match &self.command {
            Command::Simulate(args) => cmd_simulate(args),
            Command::Train(args) => cmd_train(args),
            Command::Predict(args) => cmd_predict(args),
            Command::Evaluate(args) => cmd_evaluate(args),
        }
    }
}

/// Configure the logger from `MENSA_LOG_LEVEL` (error | info | debug).
pub fn init_logging() {
    let level = match std::env::var("MENSA_LOG_LEVEL").as_deref() {
        Ok("error") => log::LevelFilter::Error,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Info,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}
