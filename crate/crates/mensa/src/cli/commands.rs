//! Command implementations behind the `mensa` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::data::{
    encode_event_free, load_csv_auto, preprocess_apply, preprocess_fit, preprocess_from_doc,
    preprocess_to_doc, save_csv, split_stratified, MultiEventDataset, PreprocessState, SplitSpec,
};
use crate::kv::{fmt_f64, Doc};
use crate::metrics::{
    d_calibration_from_curves, global_ci, harrell_ci, ibs, km_fit, local_ci, margin_mae,
    survival_l1, EventMetrics, MetricReport,
};
use crate::model::{
    median_from_curve, model_from_doc, model_to_doc, IsdMatrix, MensaConfig, MensaModel,
    SurvivalCurve,
};
use crate::simulate::{
    generate_dataset, read_sidecar, tau_to_theta, write_sidecar, CopulaFamily, GroundTruthDgp,
    RiskKind,
};
use crate::train::{train, Mode, TrainConfig, TrajectorySet};

use super::{CliError, RunConfig};

// ---------------------------------------------------------------- simulate

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Risk function of the generating process: linear | nonlinear
    #[arg(long, default_value = "linear")]
    pub dgp: RiskKind,
    /// Copula family: independence | clayton | frank
    #[arg(long, default_value = "independence")]
    pub copula: CopulaFamily,
    /// Kendall's tau between event and censor times, in [0, 0.9]
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Number of rows
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Feature dimension
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for data.csv and truth.txt
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.n == 0 || args.d == 0 {
        return Err(CliError::Usage("--n and --d must be at least 1".into()));
    }
    let copula = tau_to_theta(args.copula, args.tau)?;
    let mut master = ChaCha12Rng::seed_from_u64(args.seed);
    let weight_seed: u64 = master.gen();
    let data_seed: u64 = master.gen();
    let dgp = GroundTruthDgp::new(args.dgp, args.d, copula, weight_seed);
    let ds = generate_dataset(&dgp, args.n, data_seed)?;

    std::fs::create_dir_all(&args.out)?;
    save_csv(&ds, &args.out.join("data.csv"))?;
    write_sidecar(&dgp, &args.out.join("truth.txt"))?;

    let events = ds.observed.iter().filter(|&&o| o).count();
    log::info!(
        "wrote {} rows ({} events, {:.1}%) with {} copula (theta {:.4}) to {}",
        ds.n(),
        events,
        100.0 * events as f64 / ds.n() as f64,
        copula.family(),
        copula.theta(),
        args.out.display()
    );
    Ok(())
}

// ------------------------------------------------------- model file format

/// A model file as written by `mensa train`: the network plus the fitted
/// preprocessing state and dataset metadata needed to consume raw CSVs.
pub struct TrainedModel {
    pub model: MensaModel,
    pub preprocess: Option<PreprocessState>,
    pub events: Vec<String>,
    pub source: Option<String>,
    /// Encoded feature-column names the network was trained on.
    pub columns: Vec<String>,
    pub mode: Mode,
}

impl TrainedModel {
    /// Apply the stored preprocessing to a raw dataset and check the result
    /// against the training-time columns.
    pub fn prepare(&self, ds: &MultiEventDataset) -> Result<MultiEventDataset, CliError> {
        prepare_features(self, ds)
    }
}

fn write_model_file(path: &Path, mf: &TrainedModel) -> Result<(), CliError> {
    let mut doc = Doc::new();
    let meta = doc.push("meta");
    meta.set("mode", mf.mode);
    meta.set("events", mf.events.join(","));
    if let Some(source) = &mf.source {
        meta.set("source", source);
    }
    for column in &mf.columns {
        meta.set("column", column);
    }
    if let Some(prep) = &mf.preprocess {
        preprocess_to_doc(prep, &mut doc);
    }
    model_to_doc(&mf.model, &mut doc);
    std::fs::write(path, doc.to_string())?;
    Ok(())
}

/// Read a model file written by `mensa train`.
pub fn load_trained_model(path: &Path) -> Result<TrainedModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read model {}: {e}", path.display())))?;
    let doc = Doc::parse(&text)?;
    let model = model_from_doc(&doc)?;
    let preprocess = preprocess_from_doc(&doc)?;
    let (events, source, columns, mode) = match doc.section("meta") {
        Some(meta) => {
            let events: Vec<String> = meta
                .get("events")
                .map(|raw| raw.split(',').map(|s| s.to_string()).collect())
                .unwrap_or_default();
            let source = meta.get("source").map(|s| s.to_string());
            let columns = meta.get_all("column").map(|s| s.to_string()).collect();
            let mode = meta
                .get("mode")
                .and_then(|raw| raw.parse().ok())
                .unwrap_or(Mode::Multi);
            (events, source, columns, mode)
        }
        None => (Vec::new(), None, Vec::new(), Mode::Multi),
    };
    let events = if events.is_empty() {
        (1..model.config().states)
            .map(|k| format!("event{k}"))
            .collect()
    } else {
        events
    };
    Ok(TrainedModel {
        model,
        preprocess,
        events,
        source,
        columns,
        mode,
    })
}

/// Apply the model's preprocessing (when present) and check the resulting
/// columns against what the model was trained on.
fn prepare_features(
    mf: &TrainedModel,
    ds: &MultiEventDataset,
) -> Result<MultiEventDataset, CliError> {
    let processed = match &mf.preprocess {
        Some(prep) => preprocess_apply(prep, ds)?,
        None => ds.clone(),
    };
    let got: Vec<String> = processed
        .features
        .iter()
        .map(|c| c.name().to_string())
        .collect();
    if !mf.columns.is_empty() && got != mf.columns {
        let missing: Vec<&String> = mf.columns.iter().filter(|c| !got.contains(c)).collect();
        let extra: Vec<&String> = got.iter().filter(|c| !mf.columns.contains(c)).collect();
        return Err(CliError::Usage(format!(
            "feature columns do not match the model (missing {missing:?}, unexpected {extra:?})"
        )));
    }
    if processed.features.len() != mf.model.config().features {
        return Err(CliError::Usage(format!(
            "model expects {} feature columns, data provides {}: {got:?}",
            mf.model.config().features,
            processed.features.len()
        )));
    }
    Ok(processed)
}

// ------------------------------------------------------------------- train

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// Path to the run-config file
    pub config: PathBuf,
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let rc = RunConfig::load(&args.config)?;
    if !rc.dataset.exists() {
        return Err(CliError::Usage(format!(
            "dataset {} does not exist",
            rc.dataset.display()
        )));
    }
    let ds = load_csv_auto(&rc.dataset)?;

    let mut pairs = Vec::new();
    for (a, b) in &rc.trajectories {
        let index_of = |name: &str| -> Result<usize, CliError> {
            ds.event_names
                .iter()
                .position(|n| n == name)
                .map(|i| i + 1)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "trajectory event `{name}` not among dataset events {:?}",
                        ds.event_names
                    ))
                })
        };
        pairs.push((index_of(a)?, index_of(b)?));
    }

    let split = SplitSpec::new(rc.split.0, rc.split.1, rc.split.2, rc.seed)?;
    let (train_raw, valid_raw, test_raw) = split_stratified(&ds, &split)?;
    let prep = preprocess_fit(&train_raw)?;
    let train_enc = encode_event_free(&preprocess_apply(&prep, &train_raw)?)?;
    let valid_enc = encode_event_free(&preprocess_apply(&prep, &valid_raw)?)?;

    let states = train_enc.states();
    let model = MensaModel::init(MensaConfig {
        features: train_enc.x.ncols(),
        states,
        mixtures: rc.mixtures,
        hidden: rc.hidden,
        dropout: rc.dropout,
        seed: rc.seed,
    })?;
    let tconfig = TrainConfig {
        batch_size: rc.batch_size,
        learning_rate: rc.learning_rate,
        weight_decay: rc.weight_decay,
        dropout: rc.dropout,
        epochs: rc.epochs,
        patience: rc.patience,
        mode: rc.mode,
        trajectories: TrajectorySet::new(pairs, states)?,
        log_trajectory: rc.log_trajectory,
        seed: rc.seed,
    };
    log::info!(
        "training on {} rows ({} validation), {} states, {} features",
        train_enc.n(),
        valid_enc.n(),
        states,
        train_enc.x.ncols()
    );
    let outcome = train(model, &train_enc, &valid_enc, &tconfig)?;
    log::info!(
        "finished after {} epochs; best validation loss {:.6} at epoch {}",
        outcome.log.len(),
        outcome.best_valid_loss,
        outcome.best_epoch
    );

    std::fs::create_dir_all(&rc.out)?;
    let columns = train_enc.x.ncols();
    let column_names: Vec<String> = {
        let processed = preprocess_apply(&prep, &train_raw)?;
        processed
            .features
            .iter()
            .map(|c| c.name().to_string())
            .collect()
    };
    debug_assert_eq!(columns, column_names.len());
    write_model_file(
        &rc.out.join("model.txt"),
        &TrainedModel {
            model: outcome.model,
            preprocess: Some(prep),
            events: ds.event_names.clone(),
            source: Some(rc.dataset.display().to_string()),
            columns: column_names,
            mode: rc.mode,
        },
    )?;

    let mut log_doc = Doc::new();
    let s = log_doc.push("training");
    s.set("epochs_run", outcome.log.len());
    s.set("best_epoch", outcome.best_epoch);
    s.set_f64("best_valid_loss", outcome.best_valid_loss);
    for rec in &outcome.log {
        let s = log_doc.push(&format!("epoch {}", rec.epoch));
        s.set_f64("train_loss", rec.train_loss);
        s.set_f64("valid_loss", rec.valid_loss);
        s.set("wall_ms", format!("{:.1}", rec.wall_ms));
    }
    std::fs::write(rc.out.join("train_log.txt"), log_doc.to_string())?;
    save_csv(&test_raw, &rc.out.join("test.csv"))?;
    log::info!("wrote model.txt, train_log.txt and test.csv to {}", rc.out.display());
    Ok(())
}

// ----------------------------------------------------------------- predict

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for isd.csv and medians.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Last grid time (default: twice the largest observed time)
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long, default_value_t = 512)]
    pub grid_points: usize,
}

fn linspace(max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|j| max * j as f64 / (points - 1) as f64)
        .collect()
}

pub fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    if args.grid_points < 2 {
        return Err(CliError::Usage("--grid-points must be at least 2".into()));
    }
    let mf = load_trained_model(&args.model)?;
    let ds = load_csv_auto(&args.data)?;
    let processed = prepare_features(&mf, &ds)?;
    let x = processed.matrix()?;

    let observed_max = ds.times.iter().copied().fold(0.0f64, f64::max);
    let grid_max = args.grid_max.unwrap_or(2.0 * observed_max);
    if !grid_max.is_finite() || grid_max <= 0.0 {
        return Err(CliError::Usage(format!("grid max must be positive, got {grid_max}")));
    }
    let grid = linspace(grid_max, args.grid_points);

    std::fs::create_dir_all(&args.out)?;
    let state_names: Vec<String> = std::iter::once("event-free".to_string())
        .chain(mf.events.iter().cloned())
        .collect();

    let mut isd_file = std::io::BufWriter::new(std::fs::File::create(args.out.join("isd.csv"))?);
    write!(isd_file, "instance,state")?;
    for &t in &grid {
        write!(isd_file, ",{t}")?;
    }
    writeln!(isd_file)?;

    let mut med_file =
        std::io::BufWriter::new(std::fs::File::create(args.out.join("medians.csv"))?);
    writeln!(med_file, "instance,state,median,right_censored")?;

    for i in 0..x.nrows() {
        let row: Vec<f64> = x.row(i).to_vec();
        let isd = mf.model.predict_isd(&row, &grid)?;
        for (state, name) in state_names.iter().enumerate() {
            write!(isd_file, "{i},{name}")?;
            for &s in &isd.survival[state] {
                write!(isd_file, ",{}", fmt_f64(s))?;
            }
            writeln!(isd_file)?;
            let med = median_from_curve(&isd.grid, &isd.survival[state]);
            writeln!(
                med_file,
                "{i},{name},{},{}",
                fmt_f64(med.time),
                if med.right_censored { 1 } else { 0 }
            )?;
        }
    }
    isd_file.flush()?;
    med_file.flush()?;
    log::info!(
        "wrote survival curves for {} instances x {} states to {}",
        x.nrows(),
        state_names.len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Ground-truth sidecar for Survival-L1 (synthetic single-event data)
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory for report.txt
    #[arg(long)]
    pub out: PathBuf,
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (std::fs::canonicalize(a), std::fs::canonicalize(b)) {
        (Ok(ca), Ok(cb)) => ca == cb,
        _ => a == b,
    }
}

/// 32 equally spaced quantiles of the observed times, deduplicated.
fn quantile_grid(times: &[f64]) -> Result<Vec<f64>, CliError> {
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut grid: Vec<f64> = (0..32)
        .map(|j| sorted[(j * (n - 1)) / 31])
        .collect();
    grid.dedup();
    if grid.len() < 2 {
        return Err(CliError::Usage(
            "cannot build an IBS grid: observed times are all identical".into(),
        ));
    }
    Ok(grid)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let mf = load_trained_model(&args.model)?;
    if let Some(source) = &mf.source {
        if same_file(Path::new(source), &args.data) {
            log::warn!(
                "evaluation data {} is the model's training file; metrics will be optimistic",
                args.data.display()
            );
        }
    }
    let ds = load_csv_auto(&args.data)?;
    let processed = prepare_features(&mf, &ds)?;
    let encoded = encode_event_free(&processed)?;
    let x = &encoded.x;
    let n = encoded.n();
    let k = ds.k();

    let truth = match &args.truth {
        Some(path) => {
            if k != 1 {
                return Err(CliError::Usage(
                    "Survival-L1 needs a single-event dataset".into(),
                ));
            }
            Some(read_sidecar(path)?)
        }
        None => None,
    };

    let t_max = ds.times.iter().copied().fold(0.0f64, f64::max);
    let eval_grid = linspace(t_max, 512);
    let median_grid = linspace(4.0 * t_max, 1024);

    log::info!("predicting survival curves for {n} instances");
    let mut isds: Vec<IsdMatrix> = Vec::with_capacity(n);
    let mut medians = Array2::<f64>::zeros((n, k + 1));
    for i in 0..n {
        let row: Vec<f64> = x.row(i).to_vec();
        let isd = mf.model.predict_isd(&row, &eval_grid)?;
        let isd_med = mf.model.predict_isd(&row, &median_grid)?;
        for state in 0..=k {
            medians[(i, state)] = median_from_curve(&isd_med.grid, &isd_med.survival[state]).time;
        }
        isds.push(isd);
    }

    let mut per_event = Vec::with_capacity(k);
    let mut pooled: Vec<(Vec<f64>, Vec<f64>, Vec<bool>)> = Vec::with_capacity(k);
    for event in 0..k {
        let state = event + 1;
        let times: Vec<f64> = (0..n).map(|i| encoded.times[(i, state)]).collect();
        let events: Vec<bool> = (0..n).map(|i| encoded.observed[(i, state)]).collect();
        let curves: Vec<SurvivalCurve> = isds.iter().map(|m| m.state_curve(state)).collect();
        // higher risk = earlier predicted event
        let risks: Vec<f64> = (0..n).map(|i| -medians[(i, state)]).collect();
        let preds: Vec<f64> = (0..n).map(|i| medians[(i, state)]).collect();

        let ci = harrell_ci(&risks, &times, &events).ok();
        let event_ibs = ibs(&curves, &times, &events, &quantile_grid(&times)?)?;
        let km = km_fit(&times, &events)?;
        let mmae = margin_mae(&preds, &times, &events, &km)?;
        let dcal = d_calibration_from_curves(&curves, &times, &events)?;
        let l1 = match &truth {
            Some(dgp) => {
                let raw_x = ds.matrix()?;
                let evaluators: Vec<_> = (0..n)
                    .map(|i| mf.model.curve_evaluator(&x.row(i).to_vec()))
                    .collect::<Result<_, _>>()?;
                Some(survival_l1(dgp, &raw_x, |i, t| {
                    evaluators[i].survival(state, t)
                })?)
            }
            None => None,
        };
        per_event.push(EventMetrics {
            event: mf.events.get(event).cloned().unwrap_or_else(|| format!("event{state}")),
            harrell_ci: ci,
            ibs: event_ibs,
            margin_mae: mmae,
            d_cal_p: dcal.p_value,
            d_cal_pass: dcal.passes(),
            survival_l1: l1,
        });
        pooled.push((risks, times, events));
    }

    let (global, local) = if k >= 2 {
        let refs: Vec<(&[f64], &[f64], &[bool])> = pooled
            .iter()
            .map(|(r, t, e)| (r.as_slice(), t.as_slice(), e.as_slice()))
            .collect();
        let event_times = encoded
            .times
            .slice(ndarray::s![.., 1..])
            .to_owned();
        let event_flags = encoded
            .observed
            .slice(ndarray::s![.., 1..])
            .to_owned();
        let event_risks = Array2::from_shape_fn((n, k), |(i, e)| -medians[(i, e + 1)]);
        (
            global_ci(&refs).ok(),
            local_ci(&event_risks, &event_times, &event_flags).ok(),
        )
    } else {
        (None, None)
    };

    let report = MetricReport {
        mode: mf.mode.to_string(),
        global_ci: global,
        local_ci: local,
        mean_ibs: per_event.iter().map(|e| e.ibs).sum::<f64>() / k as f64,
        mean_margin_mae: per_event.iter().map(|e| e.margin_mae).sum::<f64>() / k as f64,
        d_cal_passes: per_event.iter().filter(|e| e.d_cal_pass).count(),
        events: per_event,
    };
    std::fs::create_dir_all(&args.out)?;
    report.save(&args.out.join("report.txt"))?;
    log::info!("wrote report.txt to {}", args.out.display());
    Ok(())
}
