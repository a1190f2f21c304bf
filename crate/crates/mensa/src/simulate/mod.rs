//! Synthetic survival data with dependent censoring.
//!
//! Event and censor times share Weibull marginals whose scale is modulated
//! by a risk function of the features; residual dependence between the two
//! (beyond what the features explain) is injected at the latent level by an
//! Archimedean copula.

mod copula;
mod dgp;
mod sidecar;

pub use copula::{copula_sample, kendall_tau, tau_of_theta_frank, tau_to_theta};
pub use dgp::{
    generate_dataset, inverse_survival, true_survival, GroundTruthDgp, Margin, RiskFunction,
    RiskKind, WeibullMarginal, DEFAULT_CENSOR_MARGINAL, DEFAULT_EVENT_MARGINAL,
};
pub use sidecar::{read_sidecar, write_sidecar};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopulaFamily {
    Independence,
    Clayton,
    Frank,
}

impl std::fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            CopulaFamily::Independence => "independence",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Frank => "frank",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for CopulaFamily {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "independence" => Ok(CopulaFamily::Independence),
            "clayton" => Ok(CopulaFamily::Clayton),
            "frank" => Ok(CopulaFamily::Frank),
            other => Err(SimError::UnknownFamily(other.to_string())),
        }
    }
}

/// A validated copula choice. Clayton requires `theta >= 0`, Frank requires
/// `theta != 0`; the independence copula ignores theta entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaSpec {
    family: CopulaFamily,
    theta: f64,
}

impl CopulaSpec {
    pub fn independence() -> Self {
        CopulaSpec {
            family: CopulaFamily::Independence,
            theta: 0.0,
        }
    }

    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self, SimError> {
        if !theta.is_finite() {
            return Err(SimError::InvalidTheta { family, theta });
        }
        match family {
            CopulaFamily::Independence => Ok(Self::independence()),
            CopulaFamily::Clayton if theta >= 0.0 => Ok(CopulaSpec { family, theta }),
            CopulaFamily::Frank if theta != 0.0 => Ok(CopulaSpec { family, theta }),
            _ => Err(SimError::InvalidTheta { family, theta }),
        }
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid theta {theta} for {family} copula")]
    InvalidTheta { family: CopulaFamily, theta: f64 },
    #[error("unknown copula family `{0}`")]
    UnknownFamily(String),
    #[error("kendall tau {0} outside the supported range [0, 0.9]")]
    TauOutOfRange(f64),
    #[error("the independence copula cannot express tau = {0} > 0")]
    IndependenceWithTau(f64),
    #[error("Weibull marginal needs positive shape/scale, got shape {shape}, scale {scale}")]
    InvalidMarginal { shape: f64, scale: f64 },
    #[error("risk function dimension {got} does not match feature dimension {expected}")]
    RiskDimension { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("sidecar: {0}")]
    Sidecar(#[from] crate::kv::KvError),
    #[error("sidecar: {0}")]
    BadSidecar(String),
}
