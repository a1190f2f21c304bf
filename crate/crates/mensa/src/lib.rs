//! # mensa
//!
//! Multi-event survival analysis built on a shared-representation
//! mixture-of-Weibull network. The crate covers the full workflow:
//!
//! - [`simulate`]: synthetic survival data with dependent censoring driven
//!   by Archimedean copulas (Clayton, Frank) plus ground-truth sidecars.
//! - [`data`]: CSV ingestion, event-free state encoding, stratified
//!   splitting and train-fitted preprocessing (imputation, z-score, one-hot).
//! - [`model`]: the mixture-of-Weibull network producing per-state
//!   log-densities, log-survival values and individual survival distributions.
//! - [`train`]: competing-risks, multi-event and trajectory-ordering
//!   likelihoods with a minibatch Adam loop and early stopping.
//! - [`metrics`]: Kaplan-Meier, concordance indices (Harrell / global /
//!   local), IPCW Brier score, margin MAE, D-calibration and Survival-L1.
//! - [`diff`]: the scalar reverse-mode differentiation engine and Adam
//!   optimizer everything above trains with.
//! - [`cli`]: the `simulate` / `train` / `predict` / `evaluate` commands
//!   exposed by the `mensa` binary.
//!
//! See the crate examples for runnable end-to-end walkthroughs of each
//! capability.

pub mod cli;
pub mod data;
pub mod diff;
pub mod metrics;
pub mod model;
pub mod simulate;
pub mod train;

pub(crate) mod kv;
