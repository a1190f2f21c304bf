//! The evaluation metric suite, computed directly through the library.
//!
//! Trains a quick model on synthetic data and reports Harrell's CI, the
//! integrated Brier score, margin MAE, D-calibration and Survival-L1.
//!
//! Run with: cargo run --release --example evaluate_metrics

use mensa::data::{encode_event_free, preprocess_apply, preprocess_fit, split_stratified, SplitSpec};
use mensa::metrics::{
    d_calibration_from_curves, harrell_ci, ibs, km_fit, margin_mae, survival_l1,
};
use mensa::model::{median_from_curve, MensaConfig, MensaModel, SurvivalCurve};
use mensa::simulate::{generate_dataset, CopulaSpec, GroundTruthDgp, RiskKind};
use mensa::train::{train, Mode, TrainConfig};

fn main() {
    let dgp = GroundTruthDgp::new(RiskKind::Linear, 8, CopulaSpec::independence(), 21);
    let ds = generate_dataset(&dgp, 3_000, 22).unwrap();
    let split = SplitSpec::new(0.7, 0.1, 0.2, 23).unwrap();
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
        seed: 24,
    })
    .unwrap();
    let outcome = train(
        model,
        &train_set,
        &valid_set,
        &TrainConfig {
            epochs: 200,
            seed: 25,
            ..TrainConfig::new(Mode::Single)
        },
    )
    .unwrap();
    let model = outcome.model;
    println!("trained {} epochs (best valid loss {:.4})\n", outcome.log.len(), outcome.best_valid_loss);

    // predictions on the test split
    let n = test_set.n();
    let times: Vec<f64> = (0..n).map(|i| test_set.times[(i, 1)]).collect();
    let events: Vec<bool> = (0..n).map(|i| test_set.observed[(i, 1)]).collect();
    let t_max = times.iter().copied().fold(0.0f64, f64::max);
    let grid: Vec<f64> = (0..512).map(|j| t_max * j as f64 / 511.0).collect();
    let med_grid: Vec<f64> = (0..1024).map(|j| 4.0 * t_max * j as f64 / 1023.0).collect();

    let mut curves = Vec::with_capacity(n);
    let mut medians = Vec::with_capacity(n);
    for i in 0..n {
        let x: Vec<f64> = test_set.x.row(i).to_vec();
        let isd = model.predict_isd(&x, &grid).unwrap();
        curves.push(SurvivalCurve {
            times: isd.grid.clone(),
            survival: isd.survival[1].clone(),
        });
        let isd_med = model.predict_isd(&x, &med_grid).unwrap();
        medians.push(median_from_curve(&isd_med.grid, &isd_med.survival[1]).time);
    }
    // higher risk = earlier predicted event
    let risks: Vec<f64> = medians.iter().map(|&m| -m).collect();

    let ci = harrell_ci(&risks, &times, &events).unwrap();
    println!("Harrell's CI:   {ci:.4}");

    let mut sorted = times.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut qgrid: Vec<f64> = (0..32).map(|j| sorted[(j * (n - 1)) / 31]).collect();
    qgrid.dedup();
    let score = ibs(&curves, &times, &events, &qgrid).unwrap();
    println!("integrated BS:  {score:.4}");

    let km = km_fit(&times, &events).unwrap();
    let mmae = margin_mae(&medians, &times, &events, &km).unwrap();
    println!("margin MAE:     {mmae:.4}");

    let dcal = d_calibration_from_curves(&curves, &times, &events).unwrap();
    println!(
        "D-calibration:  p = {:.4} ({})",
        dcal.p_value,
        if dcal.passes() { "calibrated" } else { "not calibrated" }
    );

    let raw_x = test_raw.matrix().unwrap();
    let evaluators: Vec<_> = (0..n)
        .map(|i| model.curve_evaluator(&test_set.x.row(i).to_vec()).unwrap())
        .collect();
    let l1 = survival_l1(&dgp, &raw_x, |i, t| evaluators[i].survival(1, t)).unwrap();
    println!("Survival-L1:    {l1:.4}");
}
