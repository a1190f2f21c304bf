//! Likelihood construction and the minibatch training loop.

mod loop_;
mod loss;

pub use loop_::{evaluate_objective, train, EpochRecord, TrainOutcome};
pub use loss::{
    nll_competing, nll_multi, total_loss, total_loss_with_gradients, trajectory_likelihood,
};

use thiserror::Error;

use crate::diff::DiffError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid train config: {0}")]
    Config(String),
    #[error("invalid trajectory set: {0}")]
    Trajectory(String),
    #[error("non-finite likelihood term at row {row}, state {state} (value {value})")]
    NonFiniteTerm { row: usize, state: usize, value: f64 },
    #[error(
        "training aborted at epoch {epoch}, batch {batch}: {cause}; parameter norms: {norms}"
    )]
    Aborted {
        epoch: usize,
        batch: usize,
        cause: String,
        norms: String,
    },
    #[error("dataset mismatch: {0}")]
    Data(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Ordered event pairs `(earlier, later)` over state indices `1..=K`.
///
/// A pair `(A, B)` states that when both events are observed for an
/// instance, event `A` occurs before event `B`; the trajectory likelihood
/// then rewards a high survival probability for `B` at `A`'s event time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrajectorySet {
    pairs: Vec<(usize, usize)>,
}

impl TrajectorySet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validate pairs against a model/dataset with `states` states
    /// (state 0 is event-free and cannot appear in a trajectory).
    pub fn new(pairs: Vec<(usize, usize)>, states: usize) -> Result<Self, TrainError> {
        let mut seen = Vec::new();
        for &(a, b) in &pairs {
            if a == b {
                return Err(TrainError::Trajectory(format!(
                    "pair ({a}, {b}) relates a state to itself"
                )));
            }
            for (s, label) in [(a, "first"), (b, "second")] {
                if s == 0 || s >= states {
                    return Err(TrainError::Trajectory(format!(
                        "{label} state {s} outside the event range 1..{states}"
                    )));
                }
            }
            if seen.contains(&(a, b)) {
                return Err(TrainError::Trajectory(format!("duplicate pair ({a}, {b})")));
            }
            if seen.contains(&(b, a)) {
                return Err(TrainError::Trajectory(format!(
                    "pair ({a}, {b}) contradicts ({b}, {a})"
                )));
            }
            seen.push((a, b));
        }
        Ok(TrajectorySet { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Which likelihood the data supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One event; equivalent to competing risks with `K = 1`.
    Single,
    /// Mutually exclusive events: one observed time per row, shared by all
    /// states.
    Competing,
    /// Non-exclusive events with per-state observed times; supports
    /// trajectory pairs.
    Multi,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Competing => "competing",
            Mode::Multi => "multi",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single" => Ok(Mode::Single),
            "competing" => Ok(Mode::Competing),
            "multi" => Ok(Mode::Multi),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// Optimization settings. Defaults follow the synthetic-experiment
/// configuration: batch 32, learning rate 1e-3, weight decay 1e-2,
/// dropout 0.25, early stopping after 10 stale epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub patience: usize,
    pub mode: Mode,
    pub trajectories: TrajectorySet,
    /// Accumulate `log S_B(t_A)` instead of the raw survival probability in
    /// the trajectory term. Off by default.
    pub log_trajectory: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(mode: Mode) -> Self {
        TrainConfig {
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 1e-2,
            dropout: 0.25,
            epochs: 1000,
            patience: 10,
            mode,
            trajectories: TrajectorySet::empty(),
            log_trajectory: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(TrainError::Config("patience must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be >= 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(TrainError::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TrainError::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if !self.trajectories.is_empty() && self.mode != Mode::Multi {
            return Err(TrainError::Config(
                "trajectory pairs require multi mode".into(),
            ));
        }
        Ok(())
    }
}
