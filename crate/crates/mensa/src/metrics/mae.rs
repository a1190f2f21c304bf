//! Margin MAE: mean absolute error with KM-derived surrogate event times
//! and confidence weights for censored rows.

use super::km::StepCurve;
use super::MetricError;

/// Weighted MAE between predicted and (margin-adjusted) actual event times.
///
/// Observed rows contribute `|t - t_hat|` at weight 1. A row censored at
/// `t` gets the margin time `t + integral_t^horizon S_KM(u) du / S_KM(t)`
/// (its expected event time given survival to `t`) at weight
/// `1 - S_KM(t)`; when `S_KM(t)` is already zero the margin collapses to
/// `t` itself. `km` must be fitted on the same evaluation split and the
/// integral horizon is the split's largest observed time.
pub fn margin_mae(
    pred_times: &[f64],
    times: &[f64],
    events: &[bool],
    km: &StepCurve,
) -> Result<f64, MetricError> {
    let n = times.len();
    if pred_times.len() != n || events.len() != n {
        return Err(MetricError::LengthMismatch);
    }
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let horizon = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut weighted_abs = 0.0;
    let mut weight_sum = 0.0;
    for i in 0..n {
        let (target, weight) = if events[i] {
            (times[i], 1.0)
        } else {
            let s = km.eval(times[i]);
            if s <= 0.0 {
                (times[i], 1.0)
            } else {
                let margin = times[i] + km.integrate(times[i], horizon) / s;
                (margin, 1.0 - s)
            }
        };
        weighted_abs += weight * (target - pred_times[i]).abs();
        weight_sum += weight;
    }
    if weight_sum == 0.0 {
        return Err(MetricError::ZeroWeight);
    }
    Ok(weighted_abs / weight_sum)
}
