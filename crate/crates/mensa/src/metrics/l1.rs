//! Survival-L1: the normalized area between true and predicted survival
//! curves, available when the data came from a known generating process.

use ndarray::Array2;

use super::MetricError;
use crate::simulate::{inverse_survival, true_survival, GroundTruthDgp, Margin};

const GRID_POINTS: usize = 512;
/// The per-instance horizon is where the true curve reaches this level.
const HORIZON_QUANTILE: f64 = 0.01;

/// Mean over instances of the time-normalized L1 distance between the true
/// conditional event-survival curve and a prediction.
///
/// For each instance the horizon `T_i` is the time where the true curve
/// reaches 1%, and the integral runs over `[0, T_i]` on a log-spaced grid,
/// normalized by `T_i`. `pred(i, t)` supplies the predicted survival of
/// instance `i` at time `t`.
pub fn survival_l1<F>(truth: &GroundTruthDgp, xs: &Array2<f64>, pred: F) -> Result<f64, MetricError>
where
    F: Fn(usize, f64) -> f64,
{
    let n = xs.nrows();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    if xs.ncols() != truth.dim() {
        return Err(MetricError::Invalid(format!(
            "feature dimension {} does not match the generating process ({})",
            xs.ncols(),
            truth.dim()
        )));
    }
    let mut total = 0.0;
    for i in 0..n {
        let x: Vec<f64> = xs.row(i).to_vec();
        let horizon = inverse_survival(truth, &x, HORIZON_QUANTILE, Margin::Event);
        // log-spaced grid over four decades up to the horizon, anchored at 0
        let mut grid = Vec::with_capacity(GRID_POINTS + 1);
        grid.push(0.0);
        let lg_hi = horizon.log10();
        let lg_lo = lg_hi - 4.0;
        for k in 0..GRID_POINTS {
            let f = k as f64 / (GRID_POINTS - 1) as f64;
            grid.push(10f64.powf(lg_lo + f * (lg_hi - lg_lo)));
        }
        let gap: Vec<f64> = grid
            .iter()
            .map(|&t| (true_survival(truth, &x, t, Margin::Event) - pred(i, t)).abs())
            .collect();
        let mut integral = 0.0;
        for (ts, vs) in grid.windows(2).zip(gap.windows(2)) {
            integral += 0.5 * (vs[0] + vs[1]) * (ts[1] - ts[0]);
        }
        total += integral / horizon;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{CopulaSpec, RiskFunction, WeibullMarginal};

    fn exponential_truth() -> GroundTruthDgp {
        GroundTruthDgp {
            event: WeibullMarginal::new(1.0, 1.0).unwrap(),
            censor: WeibullMarginal::new(1.0, 1.0).unwrap(),
            risk: RiskFunction::Linear { weights: vec![0.0] },
            copula: CopulaSpec::independence(),
        }
    }

    #[test]
    fn identical_curves_score_zero() {
        let truth = exponential_truth();
        let xs = Array2::zeros((5, 1));
        let got = survival_l1(&truth, &xs, |_, t| {
            true_survival(&truth, &[0.0], t, Margin::Event)
        })
        .unwrap();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn constant_one_versus_exponential_truth() {
        // horizon T = ln(100); the exact value is 1 - 0.99 / T
        let truth = exponential_truth();
        let xs = Array2::zeros((1, 1));
        let got = survival_l1(&truth, &xs, |_, _| 1.0).unwrap();
        let horizon = 100f64.ln();

        // dense-grid numeric oracle on a uniform grid
        let steps = 2_000_000;
        let h = horizon / steps as f64;
        let mut oracle = 0.0;
        for k in 0..steps {
            let a = 1.0 - (-(k as f64) * h).exp();
            let b = 1.0 - (-((k + 1) as f64) * h).exp();
            oracle += 0.5 * (a + b) * h;
        }
        let oracle = oracle / horizon;
        let closed_form = 1.0 - 0.99 / horizon;
        assert!((oracle - closed_form).abs() < 1e-9);
        assert!((got - oracle).abs() < 1e-3, "{got} vs {oracle}");
    }

    #[test]
    fn bounded_by_one() {
        let truth = exponential_truth();
        let xs = Array2::zeros((3, 1));
        for pred in [0.0f64, 0.37, 1.0] {
            let got = survival_l1(&truth, &xs, |_, _| pred).unwrap();
            assert!(got <= 1.0 + 1e-12, "pred {pred}: {got}");
        }
    }
}
