//! Adam with bias correction and coupled weight decay.

use super::param::{GradientMap, ParamStore};
use super::DiffError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Coupled weight decay: `wd * theta` is added to the raw gradient
    /// before the moment updates.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(lr: f64) -> Self {
        AdamConfig {
            learning_rate: lr,
            ..Default::default()
        }
    }
}

/// Optimizer state: first/second moment buffers per parameter plus the step
/// counter. Buffers are aligned with the `ParamStore` the state was built
/// from; a shape change is a contract error.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    moments: Vec<(String, Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let moments = params
            .iter()
            .map(|(name, t)| (name.to_string(), vec![0.0; t.len()], vec![0.0; t.len()]))
            .collect();
        AdamState {
            config,
            step: 0,
            moments,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update over every parameter in the store.
///
/// `grads` must contain a gradient for every parameter; each gradient must
/// match its parameter's length.
pub fn adam_step(
    params: &mut ParamStore,
    grads: &GradientMap,
    state: &mut AdamState,
) -> Result<(), DiffError> {
    state.step += 1;
    let t = state.step as i32;
    let cfg = state.config;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    for (name, m, v) in &mut state.moments {
        let grad = grads
            .get(name)
            .ok_or_else(|| DiffError::UnknownParam(name.clone()))?;
        let tensor = params
            .get_mut(name)
            .ok_or_else(|| DiffError::UnknownParam(name.clone()))?;
        if grad.len() != tensor.len() {
            return Err(DiffError::ShapeMismatch {
                name: name.clone(),
                expected: tensor.len(),
                got: grad.len(),
            });
        }
        let data = tensor.data_mut();
        for i in 0..data.len() {
            let g = grad[i] + cfg.weight_decay * data[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            data[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
