//! Archimedean copula sampling and the Kendall-tau parameterization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{CopulaFamily, CopulaSpec, SimError};

fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

/// Clayton conditional quantile: solve `dC/du (v | u) = w` in closed form.
fn clayton_conditional_inverse(theta: f64, u: f64, w: f64) -> f64 {
    if theta < 1e-12 {
        return w;
    }
    let inner = u.powf(-theta) * (w.powf(-theta / (theta + 1.0)) - 1.0) + 1.0;
    inner.powf(-1.0 / theta)
}

/// Frank conditional CDF `dC/du (v | u)`.
fn frank_conditional(theta: f64, u: f64, v: f64) -> f64 {
    let eu = (-theta * u).exp();
    let ev = (-theta * v).exp();
    let d = (-theta).exp() - 1.0;
    eu * (ev - 1.0) / (d + (eu - 1.0) * (ev - 1.0))
}

/// Frank conditional quantile by bisection on the monotone conditional CDF.
fn frank_conditional_inverse(theta: f64, u: f64, w: f64) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if frank_conditional(theta, u, mid) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draw `n` pairs `(u, v)` on the open unit square with the dependence
/// structure of the given copula, via conditional-distribution sampling:
/// `u` uniform, then `v` from the conditional quantile given `u`.
pub fn copula_sample(spec: &CopulaSpec, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_with_rng(spec, n, &mut rng)
}

pub(crate) fn sample_with_rng<R: Rng>(spec: &CopulaSpec, n: usize, rng: &mut R) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u = open_unit(rng);
        let w = open_unit(rng);
        let v = match spec.family() {
            CopulaFamily::Independence => w,
            CopulaFamily::Clayton => clayton_conditional_inverse(spec.theta(), u, w),
            CopulaFamily::Frank => frank_conditional_inverse(spec.theta(), u, w),
        };
        out.push((u, v.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16)));
    }
    out
}

/// Kendall's tau of a Frank copula, `1 - (4/theta) * (1 - D1(theta))`, with
/// the Debye function evaluated by Simpson quadrature.
pub fn tau_of_theta_frank(theta: f64) -> f64 {
    debug_assert!(theta != 0.0);
    // D1(x) = (1/x) * integral_0^x t / (e^t - 1) dt
    let debye1 = |x: f64| -> f64 {
        let steps = 4096;
        let h = x / steps as f64;
        let f = |t: f64| {
            if t.abs() < 1e-12 {
                1.0
            } else {
                t / (t.exp() - 1.0)
            }
        };
        let mut acc = f(0.0) + f(x);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0 / x
    };
    1.0 - 4.0 / theta * (1.0 - debye1(theta))
}

/// Invert the tau(theta) map for a family. `tau` must lie in `[0, 0.9]`;
/// `tau = 0` yields the independence spec for every family.
pub fn tau_to_theta(family: CopulaFamily, tau: f64) -> Result<CopulaSpec, SimError> {
    if !(0.0..=0.9).contains(&tau) {
        return Err(SimError::TauOutOfRange(tau));
    }
    if tau == 0.0 {
        return Ok(CopulaSpec::independence());
    }
    match family {
        CopulaFamily::Independence => Err(SimError::IndependenceWithTau(tau)),
        CopulaFamily::Clayton => {
            // closed form: tau = theta / (theta + 2)
            CopulaSpec::new(family, 2.0 * tau / (1.0 - tau))
        }
        CopulaFamily::Frank => {
            let mut lo = 1e-8;
            let mut hi = 150.0;
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if tau_of_theta_frank(mid) < tau {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let theta = 0.5 * (lo + hi);
            debug_assert!((tau_of_theta_frank(theta) - tau).abs() < 1e-6);
            CopulaSpec::new(family, theta)
        }
    }
}

/// Sample Kendall's tau: the normalized difference between concordant and
/// discordant pair counts. Assumes continuous data (no ties); runs in
/// `O(n log n)` by counting inversions with a merge sort.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 2);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut y_sorted: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    let mut buf = vec![0.0; n];
    let inversions = count_inversions(&mut y_sorted, &mut buf);
    let pairs = (n * (n - 1) / 2) as f64;
    (pairs - 2.0 * inversions as f64) / pairs
}

fn count_inversions(data: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = data.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = data.split_at_mut(mid);
    let mut inv = count_inversions(left, &mut buf[..mid]) + count_inversions(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0usize, 0usize, 0usize);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            inv += (left.len() - i) as u64;
            j += 1;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    data.copy_from_slice(&buf[..n]);
    inv
}
