//! Ground-truth sidecar files.
//!
//! `simulate` writes one of these next to the dataset CSV; `evaluate` reads
//! it back to compute Survival-L1 against the true conditional curves.

use std::path::Path;

use super::{CopulaFamily, CopulaSpec, GroundTruthDgp, RiskFunction, SimError, WeibullMarginal};
use crate::kv::{Doc, Section};

fn marginal_section(doc: &mut Doc, name: &str, m: &WeibullMarginal) {
    let s = doc.push(name);
    s.set_f64("shape", m.shape);
    s.set_f64("scale", m.scale);
}

fn read_marginal(s: &Section) -> Result<WeibullMarginal, SimError> {
    WeibullMarginal::new(s.require_f64("shape")?, s.require_f64("scale")?)
}

pub fn write_sidecar(dgp: &GroundTruthDgp, path: &Path) -> Result<(), SimError> {
    let mut doc = Doc::new();
    marginal_section(&mut doc, "marginal event", &dgp.event);
    marginal_section(&mut doc, "marginal censor", &dgp.censor);
    let s = doc.push("risk");
    match &dgp.risk {
        RiskFunction::Linear { weights } => {
            s.set("kind", "linear");
            s.set("dim", weights.len());
            s.set_f64_list("weights", weights);
        }
        RiskFunction::Nonlinear { hidden, output } => {
            s.set("kind", "nonlinear");
            s.set("dim", output.len());
            s.set_f64_list("hidden", hidden);
            s.set_f64_list("output", output);
        }
    }
    let s = doc.push("copula");
    s.set("family", dgp.copula.family());
    s.set_f64("theta", dgp.copula.theta());
    std::fs::write(path, doc.to_string())?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<GroundTruthDgp, SimError> {
    let text = std::fs::read_to_string(path)?;
    let doc = Doc::parse(&text)?;
    let event = read_marginal(doc.require("marginal event")?)?;
    let censor = read_marginal(doc.require("marginal censor")?)?;

    let rs = doc.require("risk")?;
    let dim: usize = rs.require_usize("dim")?;
    let risk = match rs.require("kind")? {
        "linear" => {
            let weights = rs.require_f64_list("weights")?;
            if weights.len() != dim {
                return Err(SimError::RiskDimension {
                    expected: dim,
                    got: weights.len(),
                });
            }
            RiskFunction::Linear { weights }
        }
        "nonlinear" => {
            let hidden = rs.require_f64_list("hidden")?;
            let output = rs.require_f64_list("output")?;
            if output.len() != dim || hidden.len() != dim * dim {
                return Err(SimError::RiskDimension {
                    expected: dim,
                    got: output.len(),
                });
            }
            RiskFunction::Nonlinear { hidden, output }
        }
        other => return Err(SimError::BadSidecar(format!("unknown risk kind `{other}`"))),
    };

    let cs = doc.require("copula")?;
    let family: CopulaFamily = cs
        .require("family")?
        .parse()
        .map_err(|e: SimError| SimError::BadSidecar(e.to_string()))?;
    let copula = if family == CopulaFamily::Independence {
        CopulaSpec::independence()
    } else {
        CopulaSpec::new(family, cs.require_f64("theta")?)?
    };

    Ok(GroundTruthDgp {
        event,
        censor,
        risk,
        copula,
    })
}
