//! Stratified train/validation/test splitting.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{DataError, MultiEventDataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64, seed: u64) -> Result<Self, DataError> {
        if train <= 0.0 || valid <= 0.0 || test <= 0.0 {
            return Err(DataError::BadSplit(format!(
                "all fractions must be positive, got ({train}, {valid}, {test})"
            )));
        }
        let sum = train + valid + test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DataError::BadSplit(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(SplitSpec {
            train,
            valid,
            test,
            seed,
        })
    }
}

/// Largest-remainder apportionment of `n` rows across the three splits.
/// Each count is within one of `fraction * n`; ties go to train, then valid.
fn apportion(n: usize, spec: &SplitSpec) -> [usize; 3] {
    let fracs = [spec.train, spec.valid, spec.test];
    let mut counts = [0usize; 3];
    let mut remainders = [0.0f64; 3];
    let mut assigned = 0;
    for i in 0..3 {
        let exact = fracs[i] * n as f64;
        counts[i] = exact.floor() as usize;
        remainders[i] = exact - exact.floor();
        assigned += counts[i];
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| remainders[b].partial_cmp(&remainders[a]).unwrap().then(a.cmp(&b)));
    let mut left = n - assigned;
    for &i in &order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Split a dataset into train/validation/test, stratified on the joint
/// event-indicator pattern across the `K` events.
///
/// Within each stratum the assignment is shuffled by the spec's seed and the
/// split sizes are within one row of the requested fractions. Strata smaller
/// than 3 rows fall back to global random assignment (with a warning).
pub fn split_stratified(
    ds: &MultiEventDataset,
    spec: &SplitSpec,
) -> Result<(MultiEventDataset, MultiEventDataset, MultiEventDataset), DataError> {
    let n = ds.n();
    if n < 10 {
        return Err(DataError::TooSmall { n, min: 10 });
    }
    let k = ds.k();
    if k > 63 {
        return Err(DataError::Shape("more than 63 events are not supported".into()));
    }

    // stratum key: bitmask of the row's indicator pattern
    let mut strata: Vec<(u64, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let mut key = 0u64;
        for j in 0..k {
            if ds.observed[(i, j)] {
                key |= 1 << j;
            }
        }
        match strata.binary_search_by_key(&key, |(k, _)| *k) {
            Ok(pos) => strata[pos].1.push(i),
            Err(pos) => strata.insert(pos, (key, vec![i])),
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut out: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut fallback: Vec<usize> = Vec::new();

    for (key, mut rows) in strata {
        if rows.len() < 3 {
            log::warn!(
                "stratum {key:#b} has only {} row(s); assigning globally at random",
                rows.len()
            );
            fallback.extend(rows);
            continue;
        }
        rows.shuffle(&mut rng);
        let counts = apportion(rows.len(), spec);
        let mut offset = 0;
        for (split, &count) in counts.iter().enumerate() {
            out[split].extend(&rows[offset..offset + count]);
            offset += count;
        }
    }

    for row in fallback {
        let u: f64 = rng.gen();
        let split = if u < spec.train {
            0
        } else if u < spec.train + spec.valid {
            1
        } else {
            2
        };
        out[split].push(row);
    }

    for rows in &mut out {
        rows.sort_unstable();
    }
    let [train, valid, test] = out;
    Ok((ds.subset(&train), ds.subset(&valid), ds.subset(&test)))
}
