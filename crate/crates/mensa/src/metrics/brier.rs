//! IPCW Brier score, integrated over a time grid.

use super::km::km_fit;
use super::MetricError;
use crate::model::SurvivalCurve;

/// Integrated Brier score with inverse-probability-of-censoring weights.
///
/// At each grid time `t*`:
/// `BS(t*) = mean_i [ S_i(t*)^2 * 1{t_i <= t*, event} / G(t_i)
///         + (1 - S_i(t*))^2 * 1{t_i > t*} / G(t*) ]`
/// where `G` is the Kaplan-Meier estimate of the censoring distribution.
/// Terms whose weight denominator hits zero are dropped with a warning.
/// The result is the trapezoidal integral of `BS` over the grid divided by
/// the grid's last time.
pub fn ibs(
    curves: &[SurvivalCurve],
    times: &[f64],
    events: &[bool],
    grid: &[f64],
) -> Result<f64, MetricError> {
    let n = times.len();
    if curves.len() != n || events.len() != n {
        return Err(MetricError::LengthMismatch);
    }
    if n == 0 || grid.len() < 2 {
        return Err(MetricError::Empty);
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MetricError::Invalid("grid must be strictly increasing".into()));
    }
    let censor_flags: Vec<bool> = events.iter().map(|&e| !e).collect();
    let g = km_fit(times, &censor_flags)?;

    let mut dropped = false;
    let bs: Vec<f64> = grid
        .iter()
        .map(|&t_star| {
            let g_star = g.eval(t_star);
            let mut acc = 0.0;
            for i in 0..n {
                let s = curves[i].eval(t_star);
                if times[i] <= t_star && events[i] {
                    let g_i = g.eval(times[i]);
                    if g_i > 0.0 {
                        acc += s * s / g_i;
                    } else {
                        dropped = true;
                    }
                } else if times[i] > t_star {
                    if g_star > 0.0 {
                        acc += (1.0 - s) * (1.0 - s) / g_star;
                    } else {
                        dropped = true;
                    }
                }
            }
            acc / n as f64
        })
        .collect();
    if dropped {
        log::warn!("ibs: dropped terms with zero censoring-survival weight");
    }

    let mut integral = 0.0;
    for w in grid.windows(2).zip(bs.windows(2)) {
        let (ts, vs) = w;
        integral += 0.5 * (vs[0] + vs[1]) * (ts[1] - ts[0]);
    }
    Ok(integral / grid[grid.len() - 1])
}
