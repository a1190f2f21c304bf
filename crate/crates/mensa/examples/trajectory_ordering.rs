//! Multi-event training with a known event ordering.
//!
//! Event B always follows event A in the generated data. Training with the
//! trajectory pair (A, B) rewards a high survival probability for B at A's
//! event time; the example trains with and without the pair and compares.
//!
//! Run with: cargo run --release --example trajectory_ordering

use mensa::data::{encode_event_free, FeatureColumn, MultiEventDataset};
use mensa::model::{MensaConfig, MensaModel};
use mensa::train::{
    nll_multi, total_loss, train, trajectory_likelihood, Mode, TrainConfig, TrajectorySet,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

fn ordered_dataset(n: usize, seed: u64) -> MultiEventDataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let d = 4;
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut times = Array2::zeros((n, 2));
    let mut observed = Array2::from_elem((n, 2), false);
    for i in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for (j, col) in cols.iter_mut().enumerate() {
            col.push(x[j]);
        }
        let u: f64 = rng.gen_range(1e-12..1.0);
        let t_a = 10.0 * (0.4 * x[0]).exp() * (-u.ln()).powf(1.0 / 3.0);
        let t_b = t_a + 1.0 + 3.0 * rng.gen::<f64>();
        let horizon = rng.gen_range(5.0..30.0);
        times[(i, 0)] = t_a.min(horizon);
        observed[(i, 0)] = t_a <= horizon;
        times[(i, 1)] = t_b.min(horizon);
        observed[(i, 1)] = t_b <= horizon;
    }
    let features = cols
        .into_iter()
        .enumerate()
        .map(|(j, values)| FeatureColumn::Numeric {
            name: format!("x{j}"),
            values,
        })
        .collect();
    MultiEventDataset::new(features, times, observed, vec!["a".into(), "b".into()]).unwrap()
}

fn main() {
    let ds = ordered_dataset(2_000, 11);
    let encoded = encode_event_free(&ds).unwrap();
    let train_set = encoded.subset(&(0..1400).collect::<Vec<_>>());
    let valid_set = encoded.subset(&(1400..1600).collect::<Vec<_>>());
    let test_set = encoded.subset(&(1600..2000).collect::<Vec<_>>());

    let traj = TrajectorySet::new(vec![(1, 2)], 3).unwrap();

    // the total objective decomposes exactly into the likelihood pieces
    let probe = MensaModel::init(MensaConfig {
        features: 4,
        states: 3,
        mixtures: 2,
        hidden: 16,
        dropout: 0.0,
        seed: 12,
    })
    .unwrap();
    let nll = nll_multi(&probe, &train_set).unwrap();
    let tl = trajectory_likelihood(&probe, &train_set, &traj).unwrap();
    let total = total_loss(&probe, &train_set, &traj).unwrap();
    let n = train_set.n() as f64;
    println!("objective decomposition on the training split (n = {n}):");
    println!("  nll/n = {:.4}, trajectory/n = {:.4}, total = {:.4}", nll / n, tl / n, total);
    println!("  residual of (nll - traj)/n - total = {:.2e}\n", (nll - tl) / n - total);

    let init = || {
        MensaModel::init(MensaConfig {
            features: 4,
            states: 3,
            mixtures: 2,
            hidden: 16,
            dropout: 0.0,
            seed: 12,
        })
        .unwrap()
    };
    let base = TrainConfig {
        batch_size: 64,
        weight_decay: 1e-3,
        dropout: 0.0,
        epochs: 25,
        patience: 25,
        mode: Mode::Multi,
        seed: 13,
        ..TrainConfig::new(Mode::Multi)
    };
    let mut guided_cfg = base.clone();
    guided_cfg.trajectories = traj;

    println!("training without the trajectory term...");
    let plain = train(init(), &train_set, &valid_set, &base).unwrap();
    println!("training with the (a, b) trajectory pair...");
    let guided = train(init(), &train_set, &valid_set, &guided_cfg).unwrap();

    let mean_sb = |model: &MensaModel| {
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..test_set.n() {
            if test_set.observed[(i, 1)] && test_set.observed[(i, 2)] {
                let x: Vec<f64> = test_set.x.row(i).to_vec();
                total += model.log_surv(&x, test_set.times[(i, 1)], 2).unwrap().exp();
                count += 1;
            }
        }
        (total / count as f64, count)
    };
    let (sb_plain, pairs) = mean_sb(&plain.model);
    let (sb_guided, _) = mean_sb(&guided.model);
    println!("\nmean S_b(t_a) over {pairs} doubly observed test pairs:");
    println!("  without trajectory term: {sb_plain:.4}");
    println!("  with trajectory term:    {sb_guided:.4}");
}
