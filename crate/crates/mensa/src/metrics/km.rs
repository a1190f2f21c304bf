//! The Kaplan-Meier product-limit estimator.

use super::MetricError;

/// A right-continuous step function starting at 1: `values[j]` holds on
/// `[times[j], times[j+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepCurve {
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            1.0
        } else {
            self.values[idx - 1]
        }
    }

    /// Exact integral of the step function over `[from, to]`.
    pub fn integrate(&self, from: f64, to: f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        let mut total = 0.0;
        let mut lo = from;
        // knots strictly inside (from, to)
        let start = self.times.partition_point(|&x| x <= from);
        for &knot in &self.times[start..] {
            if knot >= to {
                break;
            }
            total += self.eval(lo) * (knot - lo);
            lo = knot;
        }
        total += self.eval(lo) * (to - lo);
        total
    }
}

/// Product-limit estimate of the survival function. Jumps occur only at
/// observed event times; a censored-only tail leaves the curve flat.
pub fn km_fit(times: &[f64], events: &[bool]) -> Result<StepCurve, MetricError> {
    if times.len() != events.len() {
        return Err(MetricError::LengthMismatch);
    }
    if times.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).unwrap());

    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut survival = 1.0f64;
    let mut at_risk = n;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut deaths = 0usize;
        let mut here = 0usize;
        while i + here < n && times[order[i + here]] == t {
            if events[order[i + here]] {
                deaths += 1;
            }
            here += 1;
        }
        if deaths > 0 {
            survival *= 1.0 - deaths as f64 / at_risk as f64;
            jump_times.push(t);
            values.push(survival);
        }
        at_risk -= here;
        i += here;
    }
    Ok(StepCurve {
        times: jump_times,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn product_limit_by_hand() {
        let curve = km_fit(&[1.0, 2.0, 3.0], &[true, true, true]).unwrap();
        assert!((curve.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((curve.eval(2.5) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(curve.eval(3.0), 0.0);
        assert_eq!(curve.eval(0.5), 1.0);
    }

    #[test]
    fn all_censored_is_flat_one() {
        let curve = km_fit(&[1.0, 5.0, 9.0], &[false, false, false]).unwrap();
        assert!(curve.times.is_empty());
        for t in [0.0, 4.0, 100.0] {
            assert_eq!(curve.eval(t), 1.0);
        }
    }

    #[test]
    fn single_event_drops_to_zero() {
        let curve = km_fit(&[5.0], &[true]).unwrap();
        assert_eq!(curve.eval(4.999), 1.0);
        assert_eq!(curve.eval(5.0), 0.0);
    }

    /// Definition-level oracle: recompute the product over distinct event
    /// times with explicitly counted risk sets.
    pub(super) fn km_brute(times: &[f64], events: &[bool], t: f64) -> f64 {
        let mut event_times: Vec<f64> = times
            .iter()
            .zip(events)
            .filter(|(_, &e)| e)
            .map(|(&t, _)| t)
            .collect();
        event_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        event_times.dedup();
        let mut s = 1.0;
        for &tau in event_times.iter().filter(|&&tau| tau <= t) {
            let at_risk = times.iter().filter(|&&x| x >= tau).count() as f64;
            let deaths = times
                .iter()
                .zip(events)
                .filter(|(&x, &e)| x == tau && e)
                .count() as f64;
            s *= 1.0 - deaths / at_risk;
        }
        s
    }

    #[test]
    fn matches_brute_force_on_small_datasets() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..60 {
            let n = rng.gen_range(1..=8);
            // ties are likely with a coarse integer grid
            let times: Vec<f64> = (0..n).map(|_| rng.gen_range(1..5) as f64).collect();
            let events: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let curve = km_fit(&times, &events).unwrap();
            for t in [0.0, 1.0, 1.5, 2.0, 3.0, 4.0, 10.0] {
                let expected = km_brute(&times, &events, t);
                assert!(
                    (curve.eval(t) - expected).abs() < 1e-12,
                    "times {times:?} events {events:?} at {t}"
                );
            }
        }
    }

    #[test]
    fn integration_of_steps() {
        let curve = StepCurve {
            times: vec![1.0, 2.0],
            values: vec![0.5, 0.25],
        };
        // 1.0 on [0,1), 0.5 on [1,2), 0.25 after
        assert!((curve.integrate(0.0, 3.0) - (1.0 + 0.5 + 0.25)).abs() < 1e-15);
        assert!((curve.integrate(0.5, 1.5) - (0.5 + 0.25)).abs() < 1e-15);
        assert!((curve.integrate(2.5, 4.0) - 0.375).abs() < 1e-15);
        assert_eq!(curve.integrate(2.0, 2.0), 0.0);
    }
}
