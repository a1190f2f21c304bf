//! The full single-event workflow: simulate, split, preprocess, train with
//! early stopping, then measure Survival-L1 against the known ground truth
//! and against a covariate-free Kaplan-Meier baseline.
//!
//! Run with: cargo run --release --example train_synthetic

use mensa::data::{encode_event_free, preprocess_apply, preprocess_fit, split_stratified, SplitSpec};
use mensa::metrics::{km_fit, survival_l1};
use mensa::model::{MensaConfig, MensaModel};
use mensa::simulate::{generate_dataset, CopulaSpec, GroundTruthDgp, RiskKind};
use mensa::train::{train, Mode, TrainConfig, TrajectorySet};

fn main() {
    let dgp = GroundTruthDgp::new(RiskKind::Linear, 10, CopulaSpec::independence(), 1);
    let ds = generate_dataset(&dgp, 4_000, 2).unwrap();
    let events = ds.observed.iter().filter(|&&o| o).count();
    println!("simulated {} rows, {:.1}% events", ds.n(), 100.0 * events as f64 / ds.n() as f64);

    let split = SplitSpec::new(0.7, 0.1, 0.2, 3).unwrap();
    let (train_raw, valid_raw, test_raw) = split_stratified(&ds, &split).unwrap();
    let prep = preprocess_fit(&train_raw).unwrap();
    let train_set = encode_event_free(&preprocess_apply(&prep, &train_raw).unwrap()).unwrap();
    let valid_set = encode_event_free(&preprocess_apply(&prep, &valid_raw).unwrap()).unwrap();
    let test_set = encode_event_free(&preprocess_apply(&prep, &test_raw).unwrap()).unwrap();

    let model = MensaModel::init(MensaConfig {
        features: train_set.x.ncols(),
        states: 2,
        mixtures: 1,
        hidden: 32,
        dropout: 0.25,
        seed: 4,
    })
    .unwrap();
    let config = TrainConfig {
        epochs: 200,
        mode: Mode::Single,
        trajectories: TrajectorySet::empty(),
        seed: 5,
        ..TrainConfig::new(Mode::Single)
    };
    let outcome = train(model, &train_set, &valid_set, &config).unwrap();
    println!(
        "trained for {} epochs; best validation loss {:.4} at epoch {}",
        outcome.log.len(),
        outcome.best_valid_loss,
        outcome.best_epoch
    );

    // the model sees z-scored features; the ground truth uses raw ones
    let raw_x = test_raw.matrix().unwrap();
    let evaluators: Vec<_> = (0..test_set.n())
        .map(|i| outcome.model.curve_evaluator(&test_set.x.row(i).to_vec()).unwrap())
        .collect();
    let l1_model = survival_l1(&dgp, &raw_x, |i, t| evaluators[i].survival(1, t)).unwrap();

    let km = km_fit(
        &train_raw.times.column(0).to_vec(),
        &train_raw.observed.column(0).to_vec(),
    )
    .unwrap();
    let l1_km = survival_l1(&dgp, &raw_x, |_, t| km.eval(t)).unwrap();

    println!("Survival-L1 on the test split:");
    println!("  trained model:        {l1_model:.4}");
    println!("  Kaplan-Meier baseline: {l1_km:.4}");
    println!("  ratio: {:.1}%", 100.0 * l1_model / l1_km);
}
