//! The evaluation suite: Kaplan-Meier, Harrell's / global / local
//! concordance, IPCW Brier score, margin MAE, D-calibration and
//! Survival-L1 against a known ground truth.

mod brier;
mod concordance;
mod dcal;
mod km;
mod l1;
mod mae;
mod report;

pub use brier::ibs;
pub use concordance::{global_ci, harrell_ci, local_ci};
pub use dcal::{d_calibration, d_calibration_from_curves, DCalibration};
pub use km::{km_fit, StepCurve};
pub use l1::survival_l1;
pub use mae::margin_mae;
pub use report::{EventMetrics, MetricReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("input arrays have mismatched lengths")]
    LengthMismatch,
    #[error("no comparable pairs")]
    NoComparablePairs,
    #[error("empty input")]
    Empty,
    #[error("need at least {min} instances, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("all margin weights are zero; cannot form a weighted mean")]
    ZeroWeight,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Kv(#[from] crate::kv::KvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
