//! End-to-end exercises of the `mensa` binary: simulate, train, predict,
//! evaluate, with determinism and exit-code checks and a CLI-versus-API
//! consistency pass.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mensa::cli::load_trained_model;
use mensa::data::{encode_event_free, load_csv_auto};
use mensa::metrics::{harrell_ci, MetricReport};
use mensa::model::median_from_curve;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mensa")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("MENSA_LOG_LEVEL", "error")
        .output()
        .expect("binary should launch")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulate_into(dir: &Path, seed: u64, n: usize) {
    let out = run(&[
        "simulate",
        "--dgp",
        "linear",
        "--copula",
        "clayton",
        "--tau",
        "0.25",
        "--n",
        &n.to_string(),
        "--d",
        "4",
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
}

fn write_run_config(dir: &Path, data: &Path, out: &Path, seed: u64) -> PathBuf {
    let cfg = dir.join("run.txt");
    std::fs::write(
        &cfg,
        format!(
            "[run]\nmode = single\ndataset = {}\nout = {}\nseed = {seed}\n\n\
             [model]\nhidden = 8\nmixtures = 1\ndropout = 0.1\n\n\
             [train]\nbatch_size = 32\nlearning_rate = 1e-3\nweight_decay = 1e-3\nepochs = 6\npatience = 3\n",
            data.display(),
            out.display()
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn exit_codes_follow_the_contract() {
    // clap usage failure
    let out = run(&["simulate", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
    // independence copula with a positive tau is contradictory
    let out = run(&[
        "simulate",
        "--copula",
        "independence",
        "--tau",
        "0.5",
        "--out",
        "/tmp/never-created-mensa-test",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // missing dataset in a train config
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.txt");
    std::fs::write(
        &cfg,
        "[run]\nmode = single\ndataset = /no/such/file.csv\nout = out\n",
    )
    .unwrap();
    let out = run(&["train", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate_into(&a, 11, 400);
    simulate_into(&b, 11, 400);
    for file in ["data.csv", "truth.txt"] {
        let left = std::fs::read(a.join(file)).unwrap();
        let right = std::fs::read(b.join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between identical runs");
    }
}

#[test]
fn pipeline_train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    simulate_into(&data_dir, 5, 700);
    let data_csv = data_dir.join("data.csv");

    // train twice with one seed: byte-identical model files
    let (run_a, run_b) = (dir.path().join("runA"), dir.path().join("runB"));
    let cfg_a = write_run_config(dir.path(), &data_csv, &run_a, 7);
    assert_success(&run(&["train", cfg_a.to_str().unwrap()]));
    let cfg_b = {
        let cfg = dir.path().join("runB.txt");
        std::fs::write(
            &cfg,
            std::fs::read_to_string(&cfg_a)
                .unwrap()
                .replace(run_a.to_str().unwrap(), run_b.to_str().unwrap()),
        )
        .unwrap();
        cfg
    };
    assert_success(&run(&["train", cfg_b.to_str().unwrap()]));
    let model_a = std::fs::read(run_a.join("model.txt")).unwrap();
    let model_b = std::fs::read(run_b.join("model.txt")).unwrap();
    assert_eq!(model_a, model_b, "same seed should give byte-identical models");
    assert!(run_a.join("train_log.txt").exists());
    assert!(run_a.join("test.csv").exists());

    // the training log respects the epoch cap
    let log_text = std::fs::read_to_string(run_a.join("train_log.txt")).unwrap();
    let epochs = log_text.matches("[epoch ").count();
    assert!((1..=6).contains(&epochs), "logged {epochs} epochs");

    // predict: first grid column exactly 1, rows non-increasing
    let pred_dir = dir.path().join("pred");
    assert_success(&run(&[
        "predict",
        "--model",
        run_a.join("model.txt").to_str().unwrap(),
        "--data",
        run_a.join("test.csv").to_str().unwrap(),
        "--out",
        pred_dir.to_str().unwrap(),
        "--grid-points",
        "64",
    ]));
    let isd = std::fs::read_to_string(pred_dir.join("isd.csv")).unwrap();
    let mut lines = isd.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("instance,state,0"));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let values: Vec<f64> = cells[2..].iter().map(|c| c.parse().unwrap()).collect();
        assert_eq!(values[0], 1.0, "first column must be S(0) = 1");
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "row not non-increasing: {line}");
        }
    }

    // medians.csv matches the library API bit-exactly on spot-checked rows
    let trained = load_trained_model(&run_a.join("model.txt")).unwrap();
    let test_ds = load_csv_auto(&run_a.join("test.csv")).unwrap();
    let processed = trained.prepare(&test_ds).unwrap();
    let x = processed.matrix().unwrap();
    let t_max = test_ds.times.iter().copied().fold(0.0f64, f64::max);
    let grid: Vec<f64> = (0..64).map(|j| 2.0 * t_max * j as f64 / 63.0).collect();
    let medians_text = std::fs::read_to_string(pred_dir.join("medians.csv")).unwrap();
    for line in medians_text.lines().skip(1).step_by(7) {
        let cells: Vec<&str> = line.split(',').collect();
        let instance: usize = cells[0].parse().unwrap();
        let state = if cells[1] == "event-free" { 0 } else { 1 };
        let file_median: f64 = cells[2].parse().unwrap();
        let row: Vec<f64> = x.row(instance).to_vec();
        let api = trained.model.predict_time(&row, state, &grid).unwrap();
        assert_eq!(
            api.time.to_bits(),
            file_median.to_bits(),
            "median mismatch at instance {instance} state {state}"
        );
    }

    // evaluate on the held-out test split, with the ground-truth sidecar
    let eval_dir = dir.path().join("eval");
    assert_success(&run(&[
        "evaluate",
        "--model",
        run_a.join("model.txt").to_str().unwrap(),
        "--data",
        run_a.join("test.csv").to_str().unwrap(),
        "--truth",
        data_dir.join("truth.txt").to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]));
    let report = MetricReport::load(&eval_dir.join("report.txt")).unwrap();
    assert_eq!(report.events.len(), 1);
    assert!(report.local_ci.is_none(), "single-event run must omit local CI");
    assert!(report.global_ci.is_none());
    let ev = &report.events[0];
    assert!(ev.harrell_ci.unwrap() > 0.0 && ev.harrell_ci.unwrap() <= 1.0);
    assert!(ev.ibs >= 0.0);
    assert!(ev.survival_l1.is_some());
    assert!((0.0..=1.0).contains(&ev.d_cal_p));

    // CLI-versus-API consistency: recompute Harrell's CI with the same
    // inputs the evaluate command derives, expecting bit equality
    let encoded = encode_event_free(&processed).unwrap();
    let n = encoded.n();
    let med_grid: Vec<f64> = (0..1024).map(|j| 4.0 * t_max * j as f64 / 1023.0).collect();
    let mut risks = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = x.row(i).to_vec();
        let isd = trained.model.predict_isd(&row, &med_grid).unwrap();
        risks.push(-median_from_curve(&isd.grid, &isd.survival[1]).time);
        times.push(encoded.times[(i, 1)]);
        flags.push(encoded.observed[(i, 1)]);
    }
    let api_ci = harrell_ci(&risks, &times, &flags).unwrap();
    assert_eq!(
        api_ci.to_bits(),
        ev.harrell_ci.unwrap().to_bits(),
        "CLI report CI {} vs API CI {api_ci}",
        ev.harrell_ci.unwrap()
    );

    // evaluating the training file itself still succeeds (with a warning)
    let warn_dir = dir.path().join("warn");
    let out = run(&[
        "evaluate",
        "--model",
        run_a.join("model.txt").to_str().unwrap(),
        "--data",
        data_csv.to_str().unwrap(),
        "--out",
        warn_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
}
