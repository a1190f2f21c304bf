//! The mixture-of-Weibull survival network.
//!
//! One shared ReLU6 layer feeds `P` per-state heads. Each head produces, per
//! mixture component, a log-scale and log-shape (a learnable bias plus a
//! SELU-activated projection of the shared representation, exponentiated so
//! both stay positive) and a softmax gate. State 0 is the event-free state;
//! states `1..=K` are the events.

pub(crate) mod forward;
mod io;

pub use io::{load_model, save_model};
pub(crate) use io::{model_from_doc, model_to_doc};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::diff::{DiffError, ParamStore, Plain, Tensor};
use forward::{head_values, hidden_repr, lift, mixture_log_terms, HeadValues, LiftedModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("expected {expected} features, got {got}")]
    FeatureDim { expected: usize, got: usize },
    #[error("non-finite input feature value {0}")]
    NonFiniteInput(f64),
    #[error("time must be {requirement}, got {value}")]
    BadTime {
        requirement: &'static str,
        value: f64,
    },
    #[error("state {state} out of range: model has {states} states")]
    BadState { state: usize, states: usize },
    #[error("grid must start at 0 and be strictly increasing")]
    BadGrid,
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Kv(#[from] crate::kv::KvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Network shape and initialization seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MensaConfig {
    /// Input feature dimension.
    pub features: usize,
    /// Number of states `P = K + 1` (event-free plus `K` events).
    pub states: usize,
    /// Weibull components per state.
    pub mixtures: usize,
    /// Shared-layer width.
    pub hidden: usize,
    /// Inverted-dropout rate on the shared representation, training only.
    pub dropout: f64,
    pub seed: u64,
}

impl MensaConfig {
    pub fn new(features: usize, states: usize) -> Self {
        MensaConfig {
            features,
            states,
            mixtures: 1,
            hidden: 32,
            dropout: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.features == 0 {
            return Err(ModelError::Config("features must be >= 1".into()));
        }
        if self.states < 2 {
            return Err(ModelError::Config(
                "need at least 2 states (event-free plus one event)".into(),
            ));
        }
        if self.mixtures == 0 {
            return Err(ModelError::Config("mixtures must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(ModelError::Config("hidden width must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Per-state head outputs at one input: positive Weibull parameters and the
/// softmax gate over components.
#[derive(Debug, Clone)]
pub struct StateHead {
    pub scale: Vec<f64>,
    pub shape: Vec<f64>,
    pub gate: Vec<f64>,
}

/// Median survival time read off a grid; `right_censored` marks curves that
/// never reach 0.5 on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianPrediction {
    pub time: f64,
    pub right_censored: bool,
}

/// Per-instance survival probabilities: one row per state over a shared
/// time grid. `survival[p][0] == 1` and every row is non-increasing.
#[derive(Debug, Clone)]
pub struct IsdMatrix {
    pub grid: Vec<f64>,
    pub survival: Vec<Vec<f64>>,
}

impl IsdMatrix {
    pub fn state_curve(&self, state: usize) -> SurvivalCurve {
        SurvivalCurve {
            times: self.grid.clone(),
            survival: self.survival[state].clone(),
        }
    }
}

/// A survival curve on a discrete grid, evaluated anywhere by linear
/// interpolation with flat extrapolation past the ends.
#[derive(Debug, Clone)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
}

impl SurvivalCurve {
    pub fn eval(&self, t: f64) -> f64 {
        let ts = &self.times;
        let n = ts.len();
        if n == 0 {
            return 1.0;
        }
        if t <= ts[0] {
            return self.survival[0];
        }
        if t >= ts[n - 1] {
            return self.survival[n - 1];
        }
        let idx = ts.partition_point(|&x| x <= t);
        let (t0, t1) = (ts[idx - 1], ts[idx]);
        let (s0, s1) = (self.survival[idx - 1], self.survival[idx]);
        s0 + (s1 - s0) * (t - t0) / (t1 - t0)
    }
}

#[derive(Debug, Clone)]
pub struct MensaModel {
    config: MensaConfig,
    params: ParamStore,
}

impl MensaModel {
    /// Instantiate with fan-in-scaled symmetric uniform weights at the
    /// config's seed; the log-scale and log-shape biases start at zero so
    /// every component begins near a unit Weibull.
    pub fn init(config: MensaConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        let mut uniform = |n: usize, fan_in: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let (d, h, psi) = (config.features, config.hidden, config.mixtures);

        let mut params = ParamStore::new();
        let mut insert = |name: String, shape: &[usize], data: Vec<f64>| -> Result<(), DiffError> {
            params.insert(&name, Tensor::from_vec(shape, data)?)
        };
        insert("shared.w".into(), &[h, d], uniform(h * d, d))?;
        insert("shared.b".into(), &[h], vec![0.0; h])?;
        for p in 0..config.states {
            insert(format!("state{p}.scale_bias"), &[psi], vec![0.0; psi])?;
            insert(format!("state{p}.shape_bias"), &[psi], vec![0.0; psi])?;
            insert(format!("state{p}.scale_proj"), &[psi, h], uniform(psi * h, h))?;
            insert(format!("state{p}.shape_proj"), &[psi, h], uniform(psi * h, h))?;
            insert(format!("state{p}.gate"), &[psi, h], uniform(psi * h, h))?;
        }
        Ok(MensaModel { config, params })
    }

    pub(crate) fn from_parts(config: MensaConfig, params: ParamStore) -> Result<Self, ModelError> {
        config.validate()?;
        Ok(MensaModel { config, params })
    }

    pub fn config(&self) -> &MensaConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn check_input(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.config.features {
            return Err(ModelError::FeatureDim {
                expected: self.config.features,
                got: x.len(),
            });
        }
        for &v in x {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteInput(v));
            }
        }
        Ok(())
    }

    fn check_state(&self, state: usize) -> Result<(), ModelError> {
        if state >= self.config.states {
            return Err(ModelError::BadState {
                state,
                states: self.config.states,
            });
        }
        Ok(())
    }

    fn lifted_plain(&self) -> LiftedModel<f64> {
        lift(&mut Plain, self)
    }

    fn head_values_at(&self, lifted: &LiftedModel<f64>, x: &[f64]) -> Vec<HeadValues<f64>> {
        let mut alg = Plain;
        let h = hidden_repr(&mut alg, lifted, x, None);
        lifted
            .heads
            .iter()
            .map(|head| head_values(&mut alg, head, &h, self.config.mixtures))
            .collect()
    }

    /// Evaluate the heads once at `x` and return a cheap evaluator for
    /// repeated survival/density queries at that input.
    pub fn curve_evaluator(&self, x: &[f64]) -> Result<CurveEvaluator, ModelError> {
        self.check_input(x)?;
        let lifted = self.lifted_plain();
        Ok(CurveEvaluator {
            heads: self.head_values_at(&lifted, x),
        })
    }

    /// Evaluated head parameters at `x`: positive scale/shape per component
    /// plus the gate probabilities (summing to one) for every state.
    pub fn head_params(&self, x: &[f64]) -> Result<Vec<StateHead>, ModelError> {
        self.check_input(x)?;
        let lifted = self.lifted_plain();
        Ok(self
            .head_values_at(&lifted, x)
            .into_iter()
            .map(|hv| StateHead {
                scale: hv.log_scale.iter().map(|v| v.exp()).collect(),
                shape: hv.log_shape.iter().map(|v| v.exp()).collect(),
                gate: hv.log_gate.iter().map(|v| v.exp()).collect(),
            })
            .collect())
    }

    /// Log mixture density at `t > 0` for one state.
    pub fn log_pdf(&self, x: &[f64], t: f64, state: usize) -> Result<f64, ModelError> {
        self.check_state(state)?;
        if !t.is_finite() || t <= 0.0 {
            return Err(ModelError::BadTime {
                requirement: "positive and finite",
                value: t,
            });
        }
        Ok(self.curve_evaluator(x)?.log_pdf(state, t))
    }

    /// Log mixture survival at `t >= 0` for one state; exactly 0 at `t = 0`.
    pub fn log_surv(&self, x: &[f64], t: f64, state: usize) -> Result<f64, ModelError> {
        self.check_state(state)?;
        if t < 0.0 || !t.is_finite() {
            return Err(ModelError::BadTime {
                requirement: "non-negative and finite",
                value: t,
            });
        }
        Ok(self.curve_evaluator(x)?.log_surv(state, t))
    }

    /// Individual survival distribution: survival per state over the grid.
    /// The grid must start at 0 and be strictly increasing.
    pub fn predict_isd(&self, x: &[f64], grid: &[f64]) -> Result<IsdMatrix, ModelError> {
        if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::BadGrid);
        }
        let eval = self.curve_evaluator(x)?;
        let mut survival = Vec::with_capacity(self.config.states);
        for state in 0..self.config.states {
            let mut row = Vec::with_capacity(grid.len());
            row.push(1.0);
            let mut prev = 1.0f64;
            for &t in &grid[1..] {
                // the true mixture survival is non-increasing and <= 1;
                // guard against last-ulp rounding wobble
                let s = eval.survival(state, t).min(prev);
                row.push(s);
                prev = s;
            }
            survival.push(row);
        }
        Ok(IsdMatrix {
            grid: grid.to_vec(),
            survival,
        })
    }

    /// Median survival time for one state: first grid crossing of 0.5 with
    /// linear interpolation, or the last grid time flagged right-censored
    /// when the curve never reaches 0.5.
    pub fn predict_time(
        &self,
        x: &[f64],
        state: usize,
        grid: &[f64],
    ) -> Result<MedianPrediction, ModelError> {
        self.check_state(state)?;
        let isd = self.predict_isd(x, grid)?;
        Ok(median_from_curve(&isd.grid, &isd.survival[state]))
    }
}

/// Head values frozen at one input, for repeated curve queries.
#[derive(Debug)]
pub struct CurveEvaluator {
    heads: Vec<HeadValues<f64>>,
}

impl CurveEvaluator {
    pub fn states(&self) -> usize {
        self.heads.len()
    }

    /// Log mixture density; `t` must be positive.
    pub fn log_pdf(&self, state: usize, t: f64) -> f64 {
        debug_assert!(t > 0.0);
        let mut alg = Plain;
        let (lf, _) = mixture_log_terms(&mut alg, &self.heads[state], t.ln());
        lf
    }

    /// Log mixture survival; exactly 0 at `t = 0`.
    pub fn log_surv(&self, state: usize, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        if t == 0.0 {
            return 0.0;
        }
        let mut alg = Plain;
        let (_, ls) = mixture_log_terms(&mut alg, &self.heads[state], t.ln());
        ls
    }

    pub fn survival(&self, state: usize, t: f64) -> f64 {
        self.log_surv(state, t).exp()
    }
}

/// Median crossing of a survival row on a grid.
pub fn median_from_curve(grid: &[f64], survival: &[f64]) -> MedianPrediction {
    for i in 0..survival.len() {
        if survival[i] <= 0.5 {
            if i == 0 {
                return MedianPrediction {
                    time: grid[0],
                    right_censored: false,
                };
            }
            let (s0, s1) = (survival[i - 1], survival[i]);
            let (t0, t1) = (grid[i - 1], grid[i]);
            let time = if s0 > s1 {
                t0 + (s0 - 0.5) * (t1 - t0) / (s0 - s1)
            } else {
                t1
            };
            return MedianPrediction {
                time,
                right_censored: false,
            };
        }
    }
    MedianPrediction {
        time: *grid.last().unwrap(),
        right_censored: true,
    }
}
