//! The minibatch optimization loop with early stopping.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::data::StateEncodedDataset;
use crate::diff::{adam_step, dropout_scales, AdamConfig, AdamState, Plain};
use crate::model::forward::{collect_gradients, lift, lift_into_graph};
use crate::model::MensaModel;

use super::loss::{build_objective, combine_objective, LossSpec, TimeMode};
use super::{Mode, TrainConfig, TrainError, TrajectorySet};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Row-weighted mean of the minibatch objectives seen this epoch.
    pub train_loss: f64,
    /// Full-set objective on the validation split, dropout disabled.
    pub valid_loss: f64,
    pub wall_ms: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Model with the parameters of the best validation epoch.
    pub model: MensaModel,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_valid_loss: f64,
}

fn loss_spec<'t>(config: &'t TrainConfig) -> LossSpec<'t> {
    let time_mode = match config.mode {
        Mode::Single | Mode::Competing => TimeMode::Shared,
        Mode::Multi => TimeMode::PerState,
    };
    LossSpec {
        time_mode,
        traj: &config.trajectories,
        log_traj: config.log_trajectory,
    }
}

/// The mode-dependent objective of a whole dataset (what early stopping
/// monitors), computed without dropout.
pub fn evaluate_objective(
    model: &MensaModel,
    data: &StateEncodedDataset,
    config: &TrainConfig,
) -> Result<f64, TrainError> {
    let spec = loss_spec(config);
    let rows: Vec<usize> = (0..data.n()).collect();
    let mut alg = Plain;
    let lifted = lift(&mut alg, model);
    let parts = build_objective(
        &mut alg,
        &lifted,
        model.config().mixtures,
        data,
        &rows,
        None,
        &spec,
    )?;
    Ok(combine_objective(&mut alg, &parts))
}

fn check_compat(model: &MensaModel, data: &StateEncodedDataset, which: &str) -> Result<(), TrainError> {
    let cfg = model.config();
    if data.n() == 0 {
        return Err(TrainError::Data(format!("{which} split is empty")));
    }
    if data.states() != cfg.states || data.x.ncols() != cfg.features {
        return Err(TrainError::Data(format!(
            "{which} split shape ({} features, {} states) does not match the model ({}, {})",
            data.x.ncols(),
            data.states(),
            cfg.features,
            cfg.states
        )));
    }
    Ok(())
}

fn abort(err: TrainError, epoch: usize, batch: usize, model: &MensaModel) -> TrainError {
    let norms = model
        .params()
        .l2_norms()
        .into_iter()
        .map(|(name, norm)| format!("{name}={norm:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    TrainError::Aborted {
        epoch,
        batch,
        cause: err.to_string(),
        norms,
    }
}

/// Run the optimization: shuffled minibatches, one Adam step per batch,
/// per-epoch validation with early stopping, returning the parameters of
/// the best validation epoch.
pub fn train(
    mut model: MensaModel,
    train_set: &StateEncodedDataset,
    valid_set: &StateEncodedDataset,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    check_compat(&model, train_set, "train")?;
    check_compat(&model, valid_set, "validation")?;
    // re-validate the trajectory pairs against this dataset's width
    TrajectorySet::new(config.trajectories.pairs().to_vec(), model.config().states)?;

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let adam_config = AdamConfig {
        learning_rate: config.learning_rate,
        weight_decay: config.weight_decay,
        ..Default::default()
    };
    let mut adam = AdamState::new(adam_config, model.params());
    let spec = loss_spec(config);
    let mixtures = model.config().mixtures;
    let hidden = model.config().hidden;
    let n = train_set.n();

    let mut log: Vec<EpochRecord> = Vec::new();
    let mut best_valid = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = model.params().clone();
    let mut stale = 0usize;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);

        let mut loss_acc = 0.0;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let masks = if config.dropout > 0.0 {
                Some(
                    chunk
                        .iter()
                        .map(|_| dropout_scales(&mut rng, hidden, config.dropout))
                        .collect::<Vec<_>>(),
                )
            } else {
                None
            };

            let (mut graph, lifted) = lift_into_graph(&model);
            let parts = build_objective(
                &mut graph,
                &lifted,
                mixtures,
                train_set,
                chunk,
                masks.as_deref(),
                &spec,
            )
            .map_err(|e| abort(e, epoch, batch_idx, &model))?;
            let objective = combine_objective(&mut graph, &parts);
            let loss = graph.value(objective);
            if !loss.is_finite() {
                return Err(abort(
                    TrainError::Data(format!("batch objective is {loss}")),
                    epoch,
                    batch_idx,
                    &model,
                ));
            }
            loss_acc += loss * chunk.len() as f64;

            let grads = graph.backward(objective)?;
            let mut gmap = collect_gradients(&lifted, &grads)?;
            // short final batches contribute in proportion to their size
            if chunk.len() != config.batch_size {
                gmap.scale(chunk.len() as f64 / config.batch_size as f64);
            }
            adam_step(model.params_mut(), &gmap, &mut adam)?;
        }

        let valid_loss = evaluate_objective(&model, valid_set, config)
            .map_err(|e| abort(e, epoch, usize::MAX, &model))?;
        if !valid_loss.is_finite() {
            return Err(abort(
                TrainError::Data(format!("validation objective is {valid_loss}")),
                epoch,
                usize::MAX,
                &model,
            ));
        }
        log.push(EpochRecord {
            epoch,
            train_loss: loss_acc / n as f64,
            valid_loss,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });

        if valid_loss < best_valid {
            best_valid = valid_loss;
            best_epoch = epoch;
            best_params = model.params().clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    *model.params_mut() = best_params;
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
        best_valid_loss: best_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode_event_free, split_stratified, SplitSpec};
    use crate::model::MensaConfig;
    use crate::simulate::{generate_dataset, CopulaSpec, GroundTruthDgp, RiskKind};
    use ndarray::Array2;
    use rand::Rng;

    fn synthetic_splits(
        n: usize,
        d: usize,
        seed: u64,
    ) -> (StateEncodedDataset, StateEncodedDataset) {
        let dgp = GroundTruthDgp::new(RiskKind::Linear, d, CopulaSpec::independence(), seed);
        let ds = generate_dataset(&dgp, n, seed + 1).unwrap();
        let spec = SplitSpec::new(0.7, 0.1, 0.2, seed + 2).unwrap();
        let (train, valid, _test) = split_stratified(&ds, &spec).unwrap();
        (
            encode_event_free(&train).unwrap(),
            encode_event_free(&valid).unwrap(),
        )
    }

    fn small_config(mode: Mode, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 1e-3,
            dropout: 0.1,
            epochs: 8,
            patience: 3,
            mode,
            trajectories: TrajectorySet::empty(),
            log_trajectory: false,
            seed,
        }
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let (train_set, valid_set) = synthetic_splits(200, 3, 0);
        let model = MensaModel::init(MensaConfig {
            features: 3,
            states: 2,
            mixtures: 1,
            hidden: 4,
            dropout: 0.0,
            seed: 1,
        })
        .unwrap();
        let before: Vec<Vec<f64>> = model.params().iter().map(|(_, t)| t.data().to_vec()).collect();
        let mut config = small_config(Mode::Single, 3);
        config.learning_rate = 0.0;
        config.weight_decay = 0.0;
        config.epochs = 3;
        let outcome = train(model, &train_set, &valid_set, &config).unwrap();
        let after: Vec<Vec<f64>> = outcome
            .model
            .params()
            .iter()
            .map(|(_, t)| t.data().to_vec())
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn same_seed_reproduces_the_training_log() {
        let (train_set, valid_set) = synthetic_splits(300, 4, 10);
        let config = small_config(Mode::Single, 42);
        let init = || {
            MensaModel::init(MensaConfig {
                features: 4,
                states: 2,
                mixtures: 2,
                hidden: 6,
                dropout: 0.1,
                seed: 5,
            })
            .unwrap()
        };
        let a = train(init(), &train_set, &valid_set, &config).unwrap();
        let b = train(init(), &train_set, &valid_set, &config).unwrap();
        assert_eq!(a.log.len(), b.log.len());
        for (ra, rb) in a.log.iter().zip(&b.log) {
            assert_eq!(ra.train_loss.to_bits(), rb.train_loss.to_bits());
            assert_eq!(ra.valid_loss.to_bits(), rb.valid_loss.to_bits());
        }
        for ((_, ta), (_, tb)) in a.model.params().iter().zip(b.model.params().iter()) {
            for (x, y) in ta.data().iter().zip(tb.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn training_improves_validation_loss() {
        let (train_set, valid_set) = synthetic_splits(2000, 5, 20);
        let model = MensaModel::init(MensaConfig {
            features: 5,
            states: 2,
            mixtures: 1,
            hidden: 8,
            dropout: 0.0,
            seed: 3,
        })
        .unwrap();
        let mut config = small_config(Mode::Single, 7);
        config.dropout = 0.0;
        config.epochs = 15;
        config.patience = 15;
        let initial = evaluate_objective(&model, &valid_set, &config).unwrap();
        let outcome = train(model, &train_set, &valid_set, &config).unwrap();
        assert!(
            outcome.best_valid_loss < initial,
            "no improvement: {initial} -> {}",
            outcome.best_valid_loss
        );
    }

    #[test]
    fn returned_model_attains_the_logged_minimum() {
        let (train_set, valid_set) = synthetic_splits(400, 3, 30);
        let model = MensaModel::init(MensaConfig {
            features: 3,
            states: 2,
            mixtures: 1,
            hidden: 4,
            dropout: 0.0,
            seed: 8,
        })
        .unwrap();
        let config = small_config(Mode::Single, 9);
        let outcome = train(model, &train_set, &valid_set, &config).unwrap();
        let min_logged = outcome
            .log
            .iter()
            .map(|r| r.valid_loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(outcome.best_valid_loss.to_bits(), min_logged.to_bits());
        let recomputed = evaluate_objective(&outcome.model, &valid_set, &config).unwrap();
        assert_eq!(recomputed.to_bits(), outcome.best_valid_loss.to_bits());
        assert!(outcome.log.len() <= config.epochs);
    }

    #[test]
    fn poisoned_parameters_abort_with_diagnostics() {
        let (train_set, valid_set) = synthetic_splits(100, 3, 40);
        let mut model = MensaModel::init(MensaConfig {
            features: 3,
            states: 2,
            mixtures: 1,
            hidden: 4,
            dropout: 0.0,
            seed: 2,
        })
        .unwrap();
        // an absurd log-shape overflows exp() and poisons the density term
        model
            .params_mut()
            .get_mut("state1.shape_bias")
            .unwrap()
            .data_mut()
            .fill(710.0);
        let config = small_config(Mode::Single, 4);
        match train(model, &train_set, &valid_set, &config) {
            Err(TrainError::Aborted { epoch, norms, .. }) => {
                assert_eq!(epoch, 1);
                assert!(norms.contains("state1.shape_bias"));
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn multi_mode_with_trajectories_trains() {
        // tiny smoke test: 2-event multi data with a trajectory pair
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 120;
        let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-1.0..1.0));
        let mut times = Array2::zeros((n, 3));
        let mut observed = Array2::from_elem((n, 3), false);
        for i in 0..n {
            let t_a = rng.gen_range(1.0..5.0);
            let t_b = t_a + rng.gen_range(0.5..3.0);
            let horizon = rng.gen_range(2.0..12.0f64);
            let (oa, ob) = (t_a <= horizon, t_b <= horizon);
            times[(i, 1)] = if oa { t_a } else { horizon };
            times[(i, 2)] = if ob { t_b } else { horizon };
            observed[(i, 1)] = oa;
            observed[(i, 2)] = ob;
            if oa {
                times[(i, 0)] = t_a;
            } else {
                times[(i, 0)] = horizon;
                observed[(i, 0)] = true;
            }
        }
        let data = StateEncodedDataset {
            x,
            times,
            observed,
            state_names: vec!["event-free".into(), "a".into(), "b".into()],
        };
        let train_set = data.subset(&(0..100).collect::<Vec<_>>());
        let valid_set = data.subset(&(100..120).collect::<Vec<_>>());
        let model = MensaModel::init(MensaConfig {
            features: 3,
            states: 3,
            mixtures: 2,
            hidden: 4,
            dropout: 0.0,
            seed: 6,
        })
        .unwrap();
        let mut config = small_config(Mode::Multi, 13);
        config.trajectories = TrajectorySet::new(vec![(1, 2)], 3).unwrap();
        config.dropout = 0.0;
        let outcome = train(model, &train_set, &valid_set, &config).unwrap();
        assert!(!outcome.log.is_empty());
        assert!(outcome.best_valid_loss.is_finite());
    }
}
