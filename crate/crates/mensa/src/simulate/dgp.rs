//! The ground-truth data-generating process.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use super::copula::sample_with_rng;
use super::{CopulaSpec, SimError};
use crate::data::{FeatureColumn, MultiEventDataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullMarginal {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullMarginal {
    pub fn new(shape: f64, scale: f64) -> Result<Self, SimError> {
        if shape <= 0.0 || scale <= 0.0 || !shape.is_finite() || !scale.is_finite() {
            return Err(SimError::InvalidMarginal { shape, scale });
        }
        Ok(WeibullMarginal { shape, scale })
    }
}

/// The feature-dependent log-risk `g(x)` that rescales both marginals.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskFunction {
    Linear {
        weights: Vec<f64>,
    },
    /// One hidden layer of width `d` with ReLU, then a linear read-out.
    Nonlinear {
        /// Row-major `d x d` hidden weights.
        hidden: Vec<f64>,
        output: Vec<f64>,
    },
}

impl RiskFunction {
    pub fn dim(&self) -> usize {
        match self {
            RiskFunction::Linear { weights } => weights.len(),
            RiskFunction::Nonlinear { output, .. } => output.len(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            RiskFunction::Linear { weights } => {
                weights.iter().zip(x).map(|(w, v)| w * v).sum()
            }
            RiskFunction::Nonlinear { hidden, output } => {
                let d = output.len();
                let mut acc = 0.0;
                for (j, &wo) in output.iter().enumerate() {
                    let mut h = 0.0;
                    for (i, &v) in x.iter().enumerate() {
                        h += hidden[j * d + i] * v;
                    }
                    acc += wo * h.max(0.0);
                }
                acc
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Margin {
    Event,
    Censor,
}

/// Everything needed to evaluate the true conditional survival curves and
/// to regenerate the dataset: both Weibull marginals, the risk function and
/// the copula.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthDgp {
    pub event: WeibullMarginal,
    pub censor: WeibullMarginal,
    pub risk: RiskFunction,
    pub copula: CopulaSpec,
}

/// Default marginals: event shape 4 / scale 18, censor shape 5 / scale 17.
pub const DEFAULT_EVENT_MARGINAL: WeibullMarginal = WeibullMarginal {
    shape: 4.0,
    scale: 18.0,
};
pub const DEFAULT_CENSOR_MARGINAL: WeibullMarginal = WeibullMarginal {
    shape: 5.0,
    scale: 17.0,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskKind {
    Linear,
    Nonlinear,
}

impl std::str::FromStr for RiskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(RiskKind::Linear),
            "nonlinear" => Ok(RiskKind::Nonlinear),
            other => Err(format!("unknown risk kind `{other}`")),
        }
    }
}

impl GroundTruthDgp {
    /// Build a DGP with the default marginals and risk weights drawn
    /// `N(0, 1/d)` at the given seed.
    pub fn new(kind: RiskKind, dim: usize, copula: CopulaSpec, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let sd = (1.0 / dim as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * sd
                })
                .collect()
        };
        let risk = match kind {
            RiskKind::Linear => RiskFunction::Linear { weights: draw(dim) },
            RiskKind::Nonlinear => RiskFunction::Nonlinear {
                hidden: draw(dim * dim),
                output: draw(dim),
            },
        };
        GroundTruthDgp {
            event: DEFAULT_EVENT_MARGINAL,
            censor: DEFAULT_CENSOR_MARGINAL,
            risk,
            copula,
        }
    }

    pub fn with_marginals(
        mut self,
        event: WeibullMarginal,
        censor: WeibullMarginal,
    ) -> GroundTruthDgp {
        self.event = event;
        self.censor = censor;
        self
    }

    pub fn dim(&self) -> usize {
        self.risk.dim()
    }

    fn marginal(&self, which: Margin) -> &WeibullMarginal {
        match which {
            Margin::Event => &self.event,
            Margin::Censor => &self.censor,
        }
    }
}

/// True conditional survival `S(t | x) = exp(-(t/rho)^v * exp(g(x)))`.
pub fn true_survival(dgp: &GroundTruthDgp, x: &[f64], t: f64, which: Margin) -> f64 {
    debug_assert!(t >= 0.0);
    let m = dgp.marginal(which);
    let g = dgp.risk.value(x);
    (-(t / m.scale).powf(m.shape) * g.exp()).exp()
}

/// Invert the conditional survival: the `t` with `S(t | x) = u`.
pub fn inverse_survival(dgp: &GroundTruthDgp, x: &[f64], u: f64, which: Margin) -> f64 {
    debug_assert!(u > 0.0 && u <= 1.0);
    let m = dgp.marginal(which);
    let g = dgp.risk.value(x);
    m.scale * ((-u.ln()) * (-g).exp()).powf(1.0 / m.shape)
}

/// Generate a single-event dataset of `n` rows: features i.i.d. standard
/// normal, latent `(u, v)` from the copula, event/censor times by inverting
/// the conditional survival functions, observed time the smaller of the two.
pub fn generate_dataset(
    dgp: &GroundTruthDgp,
    n: usize,
    seed: u64,
) -> Result<MultiEventDataset, SimError> {
    let d = dgp.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, d));
    for v in x.iter_mut() {
        *v = rng.sample::<f64, _>(StandardNormal);
    }
    let pairs = sample_with_rng(&dgp.copula, n, &mut rng);

    let mut times = Array2::zeros((n, 1));
    let mut observed = Array2::from_elem((n, 1), false);
    for i in 0..n {
        let row: Vec<f64> = x.row(i).to_vec();
        let (u, v) = pairs[i];
        let t_event = inverse_survival(dgp, &row, u, Margin::Event);
        let t_censor = inverse_survival(dgp, &row, v, Margin::Censor);
        times[(i, 0)] = t_event.min(t_censor);
        observed[(i, 0)] = t_event <= t_censor;
    }

    let features = (0..d)
        .map(|j| FeatureColumn::Numeric {
            name: format!("x{j}"),
            values: x.column(j).to_vec(),
        })
        .collect();
    MultiEventDataset::new(features, times, observed, vec!["event".to_string()])
        .map_err(|e| SimError::BadSidecar(e.to_string()))
}
