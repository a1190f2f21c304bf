//! The file-based workflow driven through the command API (the same code
//! paths the `mensa` binary runs): simulate, train from a run config,
//! predict, evaluate.
//!
//! Run with: cargo run --release --example cli_pipeline

use mensa::cli::{
    cmd_evaluate, cmd_predict, cmd_simulate, cmd_train, EvaluateArgs, PredictArgs, SimulateArgs,
    TrainArgs,
};
use mensa::metrics::MetricReport;
use mensa::simulate::{CopulaFamily, RiskKind};

fn main() {
    let root = std::env::temp_dir().join("mensa_cli_pipeline");
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();
    let data_dir = root.join("data");
    let run_dir = root.join("run");

    cmd_simulate(&SimulateArgs {
        dgp: RiskKind::Linear,
        copula: CopulaFamily::Clayton,
        tau: 0.3,
        n: 4_000,
        d: 6,
        seed: 1,
        out: data_dir.clone(),
    })
    .expect("simulate");
    println!("simulated dataset at {}", data_dir.join("data.csv").display());

    let config_path = root.join("run.txt");
    std::fs::write(
        &config_path,
        format!(
            "[run]\nmode = single\ndataset = {}\nout = {}\nseed = 2\n\n\
             [model]\nhidden = 16\nmixtures = 1\ndropout = 0.1\n\n\
             [train]\nbatch_size = 32\nlearning_rate = 1e-3\nweight_decay = 1e-3\nepochs = 150\npatience = 10\n",
            data_dir.join("data.csv").display(),
            run_dir.display()
        ),
    )
    .unwrap();
    cmd_train(&TrainArgs {
        config: config_path,
    })
    .expect("train");
    println!("trained model at {}", run_dir.join("model.txt").display());

    cmd_predict(&PredictArgs {
        model: run_dir.join("model.txt"),
        data: run_dir.join("test.csv"),
        out: root.join("pred"),
        grid_max: None,
        grid_points: 128,
    })
    .expect("predict");
    println!("wrote curves to {}", root.join("pred/isd.csv").display());

    cmd_evaluate(&EvaluateArgs {
        model: run_dir.join("model.txt"),
        data: run_dir.join("test.csv"),
        truth: Some(data_dir.join("truth.txt")),
        out: root.join("eval"),
    })
    .expect("evaluate");

    let report = MetricReport::load(&root.join("eval/report.txt")).unwrap();
    let ev = &report.events[0];
    println!("\nheld-out test metrics:");
    println!("  Harrell's CI: {:.4}", ev.harrell_ci.unwrap());
    println!("  IBS:          {:.4}", ev.ibs);
    println!("  margin MAE:   {:.4}", ev.margin_mae);
    println!("  D-cal p:      {:.4}", ev.d_cal_p);
    println!("  Survival-L1:  {:.4}", ev.survival_l1.unwrap());
}
