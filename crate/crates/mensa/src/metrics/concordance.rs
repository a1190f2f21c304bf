//! Concordance indices.
//!
//! A pair `(i, j)` is comparable when `t_i < t_j` and instance `i` had the
//! event; it is concordant when the earlier instance also carries the
//! strictly higher risk score. Risk ties count as discordant.

use ndarray::Array2;

use super::MetricError;

fn pair_counts(risks: &[f64], times: &[f64], events: &[bool]) -> (u64, u64) {
    let n = times.len();
    let mut concordant = 0u64;
    let mut comparable = 0u64;
    for i in 0..n {
        if !events[i] {
            continue;
        }
        for j in 0..n {
            if times[i] < times[j] {
                comparable += 1;
                if risks[i] > risks[j] {
                    concordant += 1;
                }
            }
        }
    }
    (concordant, comparable)
}

/// Harrell's concordance index over one event.
pub fn harrell_ci(risks: &[f64], times: &[f64], events: &[bool]) -> Result<f64, MetricError> {
    if risks.len() != times.len() || times.len() != events.len() {
        return Err(MetricError::LengthMismatch);
    }
    let (concordant, comparable) = pair_counts(risks, times, events);
    if comparable == 0 {
        return Err(MetricError::NoComparablePairs);
    }
    Ok(concordant as f64 / comparable as f64)
}

/// Global concordance across events: the ratio of summed concordant counts
/// to summed comparable counts, pooled over the per-event datasets.
pub fn global_ci(per_event: &[(&[f64], &[f64], &[bool])]) -> Result<f64, MetricError> {
    let mut concordant = 0u64;
    let mut comparable = 0u64;
    for (risks, times, events) in per_event {
        if risks.len() != times.len() || times.len() != events.len() {
            return Err(MetricError::LengthMismatch);
        }
        let (c, n) = pair_counts(risks, times, events);
        concordant += c;
        comparable += n;
    }
    if comparable == 0 {
        return Err(MetricError::NoComparablePairs);
    }
    Ok(concordant as f64 / comparable as f64)
}

/// Local concordance: pairs are drawn within each instance across its
/// events. `times`, `risks` and `events` are `N x K`.
pub fn local_ci(
    risks: &Array2<f64>,
    times: &Array2<f64>,
    events: &Array2<bool>,
) -> Result<f64, MetricError> {
    if risks.dim() != times.dim() || times.dim() != events.dim() {
        return Err(MetricError::LengthMismatch);
    }
    let (n, k) = times.dim();
    if k < 2 {
        return Err(MetricError::Invalid(
            "local concordance needs at least two events".into(),
        ));
    }
    let mut concordant = 0u64;
    let mut comparable = 0u64;
    for i in 0..n {
        for k1 in 0..k {
            if !events[(i, k1)] {
                continue;
            }
            for k2 in 0..k {
                if times[(i, k1)] < times[(i, k2)] {
                    comparable += 1;
                    if risks[(i, k1)] > risks[(i, k2)] {
                        concordant += 1;
                    }
                }
            }
        }
    }
    if comparable == 0 {
        return Err(MetricError::NoComparablePairs);
    }
    Ok(concordant as f64 / comparable as f64)
}
