//! Distribution calibration: a chi-square uniformity test over the
//! predicted survival probabilities at the observed times.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::MetricError;
use crate::model::SurvivalCurve;

pub const DCAL_BINS: usize = 10;
const MIN_INSTANCES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct DCalibration {
    pub p_value: f64,
    pub statistic: f64,
    /// Mass per decile of predicted survival probability; sums to `n`.
    pub histogram: [f64; DCAL_BINS],
}

impl DCalibration {
    /// The conventional pass threshold.
    pub fn passes(&self) -> bool {
        self.p_value > 0.05
    }
}

fn bin_of(p: f64) -> usize {
    ((p * DCAL_BINS as f64) as usize).min(DCAL_BINS - 1)
}

/// Run the test on precomputed `S(t_i | x_i)` values.
///
/// Uncensored rows drop their whole unit of mass into the decile of their
/// predicted probability. A row censored at probability `p` spreads its
/// unit uniformly over `[0, p]`, i.e. each decile receives its overlap with
/// that interval divided by `p`.
pub fn d_calibration(surv_probs: &[f64], events: &[bool]) -> Result<DCalibration, MetricError> {
    if surv_probs.len() != events.len() {
        return Err(MetricError::LengthMismatch);
    }
    let n = surv_probs.len();
    if n < MIN_INSTANCES {
        return Err(MetricError::TooFew {
            min: MIN_INSTANCES,
            got: n,
        });
    }
    let mut histogram = [0.0f64; DCAL_BINS];
    for (&p, &event) in surv_probs.iter().zip(events) {
        if !(0.0..=1.0).contains(&p) {
            return Err(MetricError::Invalid(format!(
                "survival probability {p} outside [0, 1]"
            )));
        }
        if event {
            histogram[bin_of(p)] += 1.0;
        } else {
            let p = p.max(1e-12);
            for (b, slot) in histogram.iter_mut().enumerate() {
                let lo = b as f64 / DCAL_BINS as f64;
                let hi = (b + 1) as f64 / DCAL_BINS as f64;
                let overlap = (p.min(hi) - lo).max(0.0);
                *slot += overlap / p;
            }
        }
    }

    let expected = n as f64 / DCAL_BINS as f64;
    let statistic: f64 = histogram
        .iter()
        .map(|&o| (o - expected) * (o - expected) / expected)
        .sum();
    let chi2 = ChiSquared::new((DCAL_BINS - 1) as f64).expect("valid dof");
    let p_value = 1.0 - chi2.cdf(statistic);
    Ok(DCalibration {
        p_value,
        statistic,
        histogram,
    })
}

/// Evaluate each instance's curve at its observed time, then run the test.
pub fn d_calibration_from_curves(
    curves: &[SurvivalCurve],
    times: &[f64],
    events: &[bool],
) -> Result<DCalibration, MetricError> {
    if curves.len() != times.len() {
        return Err(MetricError::LengthMismatch);
    }
    let probs: Vec<f64> = curves
        .iter()
        .zip(times)
        .map(|(c, &t)| c.eval(t).clamp(0.0, 1.0))
        .collect();
    d_calibration(&probs, events)
}
