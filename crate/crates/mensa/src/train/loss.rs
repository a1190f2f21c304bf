//! The training objectives, generic over the evaluation algebra.

use crate::data::StateEncodedDataset;
use crate::diff::{Algebra, Plain};
use crate::model::forward::{
    head_values, hidden_repr, lift, mixture_log_terms, LiftedModel,
};
use crate::model::MensaModel;

use super::{TrainError, TrajectorySet};

/// Observed times are clamped below at this floor before taking logs, so a
/// time of exactly zero cannot produce an infinite likelihood term.
pub(crate) const TIME_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TimeMode {
    /// Competing risks: every state evaluated at the row's single observed
    /// first-transition time (state 0's derived time).
    Shared,
    /// Multi-event: each state evaluated at its own observed time.
    PerState,
}

pub(crate) struct LossSpec<'t> {
    pub time_mode: TimeMode,
    pub traj: &'t TrajectorySet,
    pub log_traj: bool,
}

pub(crate) struct ObjectiveParts<V> {
    /// Negative log-likelihood, summed over rows and states (unnormalized).
    pub nll: V,
    /// Trajectory likelihood sum; `None` when the trajectory set is empty.
    pub traj: Option<V>,
    pub rows: usize,
}

/// Build the objective parts for a set of rows. Checks every per-state
/// likelihood term for finiteness as it goes.
pub(crate) fn build_objective<A: Algebra>(
    alg: &mut A,
    lifted: &LiftedModel<A::Value>,
    mixtures: usize,
    data: &StateEncodedDataset,
    rows: &[usize],
    masks: Option<&[Vec<f64>]>,
    spec: &LossSpec<'_>,
) -> Result<ObjectiveParts<A::Value>, TrainError> {
    let states = data.states();
    let mut nll_terms = Vec::with_capacity(rows.len() * states);
    let mut traj_terms = Vec::new();

    for (slot, &row) in rows.iter().enumerate() {
        let x: Vec<f64> = data.x.row(row).to_vec();
        let mask = masks.map(|m| m[slot].as_slice());
        let h = hidden_repr(alg, lifted, &x, mask);
        let heads: Vec<_> = lifted
            .heads
            .iter()
            .map(|head| head_values(alg, head, &h, mixtures))
            .collect();

        let shared_ln_t = {
            let t = data.times[(row, 0)].max(TIME_FLOOR);
            t.ln()
        };
        for (state, head) in heads.iter().enumerate() {
            let ln_t = match spec.time_mode {
                TimeMode::Shared => shared_ln_t,
                TimeMode::PerState => data.times[(row, state)].max(TIME_FLOOR).ln(),
            };
            let ln_t = alg.lit(ln_t);
            let (log_pdf, log_surv) = mixture_log_terms(alg, head, ln_t);
            let term = if data.observed[(row, state)] {
                log_pdf
            } else {
                log_surv
            };
            let value = alg.value(term);
            if !value.is_finite() {
                return Err(TrainError::NonFiniteTerm { row, state, value });
            }
            nll_terms.push(alg.neg(term));
        }

        for &(a, b) in spec.traj.pairs() {
            // only doubly observed pairs contribute (the indicator product)
            if data.observed[(row, a)] && data.observed[(row, b)] {
                let t_a = data.times[(row, a)].max(TIME_FLOOR);
                let ln_t = alg.lit(t_a.ln());
                let (_, log_surv_b) = mixture_log_terms(alg, &heads[b], ln_t);
                let term = if spec.log_traj {
                    log_surv_b
                } else {
                    alg.exp(log_surv_b)
                };
                let value = alg.value(term);
                if !value.is_finite() {
                    return Err(TrainError::NonFiniteTerm {
                        row,
                        state: b,
                        value,
                    });
                }
                traj_terms.push(term);
            }
        }
    }

    let nll = alg.sum(&nll_terms);
    let traj = if spec.traj.is_empty() {
        None
    } else {
        Some(alg.sum(&traj_terms))
    };
    Ok(ObjectiveParts {
        nll,
        traj,
        rows: rows.len(),
    })
}

/// Combine the parts into the descent objective
/// `(nll - trajectory) / rows`; exactly `nll / rows` with no trajectory set.
pub(crate) fn combine_objective<A: Algebra>(
    alg: &mut A,
    parts: &ObjectiveParts<A::Value>,
) -> A::Value {
    let inv_n = 1.0 / parts.rows as f64;
    match parts.traj {
        Some(traj) => {
            let diff = alg.sub(parts.nll, traj);
            alg.mul_const(diff, inv_n)
        }
        None => alg.mul_const(parts.nll, inv_n),
    }
}

fn all_rows(data: &StateEncodedDataset) -> Vec<usize> {
    (0..data.n()).collect()
}

fn check_width(model: &MensaModel, data: &StateEncodedDataset) -> Result<(), TrainError> {
    let cfg = model.config();
    if data.states() != cfg.states {
        return Err(TrainError::Data(format!(
            "dataset has {} states, model has {}",
            data.states(),
            cfg.states
        )));
    }
    if data.x.ncols() != cfg.features {
        return Err(TrainError::Data(format!(
            "dataset has {} features, model expects {}",
            data.x.ncols(),
            cfg.features
        )));
    }
    Ok(())
}

fn nll_with_mode(
    model: &MensaModel,
    data: &StateEncodedDataset,
    time_mode: TimeMode,
) -> Result<f64, TrainError> {
    check_width(model, data)?;
    let mut alg = Plain;
    let lifted = lift(&mut alg, model);
    let empty = TrajectorySet::empty();
    let spec = LossSpec {
        time_mode,
        traj: &empty,
        log_traj: false,
    };
    let rows = all_rows(data);
    let parts = build_objective(&mut alg, &lifted, model.config().mixtures, data, &rows, None, &spec)?;
    Ok(parts.nll)
}

/// Competing-risks negative log-likelihood (unnormalized sum): every state
/// is evaluated at the row's single first-transition time.
pub fn nll_competing(model: &MensaModel, data: &StateEncodedDataset) -> Result<f64, TrainError> {
    nll_with_mode(model, data, TimeMode::Shared)
}

/// Multi-event negative log-likelihood (unnormalized sum): each state is
/// evaluated at its own observed time.
pub fn nll_multi(model: &MensaModel, data: &StateEncodedDataset) -> Result<f64, TrainError> {
    nll_with_mode(model, data, TimeMode::PerState)
}

/// Trajectory likelihood (to be maximized): the sum over rows and pairs
/// `(A, B)` of `S_B(t_A)` for doubly observed pairs, in `[0, rows * pairs]`.
pub fn trajectory_likelihood(
    model: &MensaModel,
    data: &StateEncodedDataset,
    traj: &TrajectorySet,
) -> Result<f64, TrainError> {
    check_width(model, data)?;
    if traj.is_empty() {
        return Ok(0.0);
    }
    let mut alg = Plain;
    let lifted = lift(&mut alg, model);
    let spec = LossSpec {
        time_mode: TimeMode::PerState,
        traj,
        log_traj: false,
    };
    let rows = all_rows(data);
    let parts = build_objective(&mut alg, &lifted, model.config().mixtures, data, &rows, None, &spec)?;
    Ok(parts.traj.unwrap_or(0.0))
}

/// The multi-event descent objective:
/// `(nll_multi - trajectory_likelihood) / rows`.
pub fn total_loss(
    model: &MensaModel,
    data: &StateEncodedDataset,
    traj: &TrajectorySet,
) -> Result<f64, TrainError> {
    check_width(model, data)?;
    let mut alg = Plain;
    let lifted = lift(&mut alg, model);
    let spec = LossSpec {
        time_mode: TimeMode::PerState,
        traj,
        log_traj: false,
    };
    let rows = all_rows(data);
    let parts = build_objective(&mut alg, &lifted, model.config().mixtures, data, &rows, None, &spec)?;
    Ok(combine_objective(&mut alg, &parts))
}

/// [`total_loss`] plus its reverse-mode gradient over every parameter.
pub fn total_loss_with_gradients(
    model: &MensaModel,
    data: &StateEncodedDataset,
    traj: &TrajectorySet,
) -> Result<(f64, crate::diff::GradientMap), TrainError> {
    use crate::model::forward::{collect_gradients, lift_into_graph};
    check_width(model, data)?;
    let (mut graph, lifted) = lift_into_graph(model);
    let spec = LossSpec {
        time_mode: TimeMode::PerState,
        traj,
        log_traj: false,
    };
    let rows = all_rows(data);
    let parts = build_objective(
        &mut graph,
        &lifted,
        model.config().mixtures,
        data,
        &rows,
        None,
        &spec,
    )?;
    let objective = combine_objective(&mut graph, &parts);
    let value = graph.value(objective);
    let grads = graph.backward(objective)?;
    Ok((value, collect_gradients(&lifted, &grads)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MensaConfig;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn exponential_model(states: usize) -> MensaModel {
        let config = MensaConfig {
            features: 2,
            states,
            mixtures: 1,
            hidden: 3,
            dropout: 0.0,
            seed: 0,
        };
        let mut model = MensaModel::init(config).unwrap();
        let names: Vec<String> = model.params().iter().map(|(n, _)| n.to_string()).collect();
        for name in names {
            model.params_mut().get_mut(&name).unwrap().data_mut().fill(0.0);
        }
        model
    }

    fn encoded(
        x: Array2<f64>,
        times: Array2<f64>,
        observed: Array2<bool>,
    ) -> StateEncodedDataset {
        let states = times.ncols();
        StateEncodedDataset {
            x,
            times,
            observed,
            state_names: (0..states).map(|p| format!("s{p}")).collect(),
        }
    }

    #[test]
    fn competing_exponential_closed_form() {
        // one row, P = 2, shared time 1, state 0 censored, state 1 observed:
        // loss = -[log S0(1) + log f1(1)] = -[-1 + -1] = 2
        let model = exponential_model(2);
        let data = encoded(
            array![[0.0, 0.0]],
            array![[1.0, 1.0]],
            array![[false, true]],
        );
        let loss = nll_competing(&model, &data).unwrap();
        assert!((loss - 2.0).abs() < 1e-9, "loss {loss}");
    }

    #[test]
    fn all_censored_loss_decreases_in_survival() {
        // single censored state: loss = -log S, decreasing as S grows
        let model = exponential_model(2);
        let mut prev = f64::INFINITY;
        for t in [3.0, 2.0, 1.0, 0.5] {
            // smaller t = larger S(t) for the unit exponential
            let data = encoded(array![[0.0, 0.0]], array![[t, t]], array![[false, false]]);
            let loss = nll_competing(&model, &data).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
    }

    #[test]
    fn duplicating_rows_doubles_the_unnormalized_loss() {
        let model = exponential_model(2);
        let one = encoded(array![[0.2, -0.4]], array![[2.0, 2.0]], array![[false, true]]);
        let two = encoded(
            array![[0.2, -0.4], [0.2, -0.4]],
            array![[2.0, 2.0], [2.0, 2.0]],
            array![[false, true], [false, true]],
        );
        let l1 = nll_competing(&model, &one).unwrap();
        let l2 = nll_competing(&model, &two).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-12);
    }

    #[test]
    fn multi_event_mr_smith_row() {
        // states (event-free, nausea, fatigue), times 10/10/20, delta 0/1/1:
        // unit exponentials give loss = -[-10 + -10 + -20] = 40
        let model = exponential_model(3);
        let data = encoded(
            array![[0.0, 0.0]],
            array![[10.0, 10.0, 20.0]],
            array![[false, true, true]],
        );
        let loss = nll_multi(&model, &data).unwrap();
        assert!((loss - 40.0).abs() < 1e-9, "loss {loss}");
    }

    #[test]
    fn single_event_multi_equals_competing_bit_exactly() {
        // K = 1: per-state times coincide with the shared time
        let config = MensaConfig {
            features: 2,
            states: 2,
            mixtures: 2,
            hidden: 4,
            dropout: 0.0,
            seed: 9,
        };
        let model = MensaModel::init(config).unwrap();
        let data = encoded(
            array![[0.5, -0.3], [1.0, 0.2], [-0.7, 0.9]],
            array![[2.0, 2.0], [5.0, 5.0], [1.5, 1.5]],
            array![[false, true], [true, false], [false, true]],
        );
        let a = nll_competing(&model, &data).unwrap();
        let b = nll_multi(&model, &data).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn state_permutation_symmetry() {
        // permuting states (and their heads) leaves the summed loss unchanged
        let config = MensaConfig {
            features: 2,
            states: 3,
            mixtures: 2,
            hidden: 4,
            dropout: 0.0,
            seed: 4,
        };
        let model = MensaModel::init(config).unwrap();
        let mut swapped = model.clone();
        for field in ["scale_bias", "shape_bias", "scale_proj", "shape_proj", "gate"] {
            let one = swapped
                .params()
                .get(&format!("state1.{field}"))
                .unwrap()
                .data()
                .to_vec();
            let two = swapped
                .params()
                .get(&format!("state2.{field}"))
                .unwrap()
                .data()
                .to_vec();
            swapped
                .params_mut()
                .get_mut(&format!("state1.{field}"))
                .unwrap()
                .data_mut()
                .copy_from_slice(&two);
            swapped
                .params_mut()
                .get_mut(&format!("state2.{field}"))
                .unwrap()
                .data_mut()
                .copy_from_slice(&one);
        }
        let data = encoded(
            array![[0.5, -0.3], [1.0, 0.2]],
            array![[2.0, 3.0, 4.0], [1.0, 2.5, 0.7]],
            array![[false, true, false], [true, false, true]],
        );
        let data_swapped = encoded(
            array![[0.5, -0.3], [1.0, 0.2]],
            array![[2.0, 4.0, 3.0], [1.0, 0.7, 2.5]],
            array![[false, false, true], [true, true, false]],
        );
        let a = nll_multi(&model, &data).unwrap();
        let b = nll_multi(&swapped, &data_swapped).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn trajectory_requires_both_events_observed() {
        let model = exponential_model(3);
        let traj = TrajectorySet::new(vec![(1, 2)], 3).unwrap();
        for observed in [
            array![[false, false, false]],
            array![[false, true, false]],
            array![[false, false, true]],
        ] {
            let data = encoded(array![[0.0, 0.0]], array![[1.0, 1.0, 2.0]], observed);
            let t = trajectory_likelihood(&model, &data, &traj).unwrap();
            assert_eq!(t, 0.0);
        }
    }

    #[test]
    fn trajectory_exponential_value() {
        // S_B(t_A) with a unit exponential head and t_A = 0.5 is e^-0.5
        let model = exponential_model(3);
        let traj = TrajectorySet::new(vec![(1, 2)], 3).unwrap();
        let data = encoded(
            array![[0.0, 0.0]],
            array![[0.5, 0.5, 3.0]],
            array![[false, true, true]],
        );
        let t = trajectory_likelihood(&model, &data, &traj).unwrap();
        assert!((t - (-0.5f64).exp()).abs() < 1e-12, "traj {t}");
    }

    #[test]
    fn trajectory_term_is_bounded() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for seed in 0..20 {
            let config = MensaConfig {
                features: 2,
                states: 3,
                mixtures: 2,
                hidden: 3,
                dropout: 0.0,
                seed,
            };
            let model = MensaModel::init(config).unwrap();
            let n = 6;
            let x = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-1.5..1.5));
            let times = Array2::from_shape_fn((n, 3), |_| rng.gen_range(0.1..8.0));
            let observed = Array2::from_shape_fn((n, 3), |_| rng.gen_bool(0.6));
            let data = encoded(x, times, observed);
            let traj = TrajectorySet::new(vec![(1, 2)], 3).unwrap();
            let t = trajectory_likelihood(&model, &data, &traj).unwrap();
            assert!(t >= 0.0);
            assert!(t <= (n * traj.pairs().len()) as f64);
        }
    }

    #[test]
    fn loss_decomposition_identity() {
        // total(traj) + traj/N == total(empty) for any model and batch
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for seed in 0..10 {
            let config = MensaConfig {
                features: 3,
                states: 3,
                mixtures: 2,
                hidden: 4,
                dropout: 0.0,
                seed,
            };
            let model = MensaModel::init(config).unwrap();
            let n = 5;
            let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-1.0..1.0));
            let times = Array2::from_shape_fn((n, 3), |_| rng.gen_range(0.2..9.0));
            let observed = Array2::from_shape_fn((n, 3), |_| rng.gen_bool(0.5));
            let data = encoded(x, times, observed);
            let traj = TrajectorySet::new(vec![(1, 2)], 3).unwrap();
            let with = total_loss(&model, &data, &traj).unwrap();
            let without = total_loss(&model, &data, &TrajectorySet::empty()).unwrap();
            let t = trajectory_likelihood(&model, &data, &traj).unwrap();
            assert!(
                (with + t / n as f64 - without).abs() < 1e-12,
                "identity violated: {with} + {t}/{n} vs {without}"
            );
        }
    }

    #[test]
    fn empty_trajectory_set_is_exactly_the_normalized_nll() {
        let config = MensaConfig {
            features: 2,
            states: 3,
            mixtures: 2,
            hidden: 3,
            dropout: 0.0,
            seed: 21,
        };
        let model = MensaModel::init(config).unwrap();
        let data = encoded(
            array![[0.4, -0.2], [0.9, 0.1], [-0.6, 0.7]],
            array![[2.0, 3.0, 4.0], [1.0, 2.5, 0.7], [5.0, 1.1, 2.2]],
            array![[false, true, false], [true, false, true], [false, false, true]],
        );
        let empty = total_loss(&model, &data, &TrajectorySet::empty()).unwrap();
        let nll = nll_multi(&model, &data).unwrap();
        assert_eq!(empty.to_bits(), (nll * (1.0 / 3.0)).to_bits());

        // a batch with no doubly observed pair behaves identically
        let traj = TrajectorySet::new(vec![(1, 2)], 3).unwrap();
        let with = total_loss(&model, &data, &traj).unwrap();
        assert_eq!(with.to_bits(), empty.to_bits());
    }

    #[test]
    fn per_instance_normalization() {
        let model = exponential_model(2);
        let one = encoded(array![[0.1, 0.9]], array![[2.0, 2.0]], array![[false, true]]);
        let two = encoded(
            array![[0.1, 0.9], [0.1, 0.9]],
            array![[2.0, 2.0], [2.0, 2.0]],
            array![[false, true], [false, true]],
        );
        let a = total_loss(&model, &one, &TrajectorySet::empty()).unwrap();
        let b = total_loss(&model, &two, &TrajectorySet::empty()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn trajectory_set_validation() {
        assert!(TrajectorySet::new(vec![(1, 1)], 3).is_err());
        assert!(TrajectorySet::new(vec![(0, 1)], 3).is_err());
        assert!(TrajectorySet::new(vec![(1, 3)], 3).is_err());
        assert!(TrajectorySet::new(vec![(1, 2), (2, 1)], 3).is_err());
        assert!(TrajectorySet::new(vec![(1, 2), (1, 2)], 3).is_err());
        assert!(TrajectorySet::new(vec![(1, 2)], 3).is_ok());
    }

    /// Central finite differences of the full objective over every scalar
    /// parameter, evaluated through the plain algebra.
    pub(super) fn fd_gradient(
        model: &MensaModel,
        data: &StateEncodedDataset,
        traj: &TrajectorySet,
        name: &str,
        index: usize,
        h: f64,
    ) -> f64 {
        let mut up = model.clone();
        up.params_mut().get_mut(name).unwrap().data_mut()[index] += h;
        let mut down = model.clone();
        down.params_mut().get_mut(name).unwrap().data_mut()[index] -= h;
        let lu = total_loss(&up, data, traj).unwrap();
        let ld = total_loss(&down, data, traj).unwrap();
        (lu - ld) / (2.0 * h)
    }

    #[test]
    fn objective_gradients_match_finite_differences() {
        use crate::model::forward::{collect_gradients, lift_into_graph};

        let config = MensaConfig {
            features: 3,
            states: 3,
            mixtures: 2,
            hidden: 4,
            dropout: 0.0,
            seed: 2,
        };
        let model = MensaModel::init(config).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 4;
        let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-1.0..1.0));
        let times = Array2::from_shape_fn((n, 3), |_| rng.gen_range(0.3..6.0));
        let mut observed = Array2::from_shape_fn((n, 3), |_| rng.gen_bool(0.5));
        observed[(0, 1)] = true;
        observed[(0, 2)] = true; // ensure a doubly observed pair
        let data = encoded(x, times, observed);
        let traj = TrajectorySet::new(vec![(1, 2)], 3).unwrap();

        let (mut graph, lifted) = lift_into_graph(&model);
        let spec = LossSpec {
            time_mode: TimeMode::PerState,
            traj: &traj,
            log_traj: false,
        };
        let rows: Vec<usize> = (0..n).collect();
        let parts =
            build_objective(&mut graph, &lifted, 2, &data, &rows, None, &spec).unwrap();
        let objective = combine_objective(&mut graph, &parts);
        let grads = graph.backward(objective).unwrap();
        let gmap = collect_gradients(&lifted, &grads).unwrap();

        let names: Vec<String> = model.params().iter().map(|(n, _)| n.to_string()).collect();
        for name in names {
            let len = model.params().get(&name).unwrap().len();
            for idx in 0..len {
                let analytic = gmap.get(&name).unwrap()[idx];
                let fd = fd_gradient(&model, &data, &traj, &name, idx, 1e-6);
                let denom = analytic.abs().max(1e-8);
                assert!(
                    (analytic - fd).abs() / denom < 1e-4,
                    "{name}[{idx}]: analytic {analytic} vs fd {fd}"
                );
            }
        }
    }
}
