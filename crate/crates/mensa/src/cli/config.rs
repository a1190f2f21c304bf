//! Run configuration files: flat `key = value` text with section headers.
//!
//! ```text
//! [run]
//! mode = multi
//! dataset = data/sim/data.csv
//! out = runs/exp0
//! seed = 0
//!
//! [model]
//! hidden = 32
//! mixtures = 1
//! dropout = 0.25
//!
//! [train]
//! batch_size = 32
//! learning_rate = 1e-3
//! weight_decay = 1e-2
//! epochs = 1000
//! patience = 10
//!
//! [split]
//! train = 0.7
//! valid = 0.1
//! test = 0.2
//!
//! [trajectories]
//! pair = relapse,death
//! ```
//!
//! Every section except `[run]` is optional; omitted keys fall back to the
//! defaults shown above.

use std::path::{Path, PathBuf};

use crate::kv::{Doc, Section};
use crate::train::Mode;

use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub hidden: usize,
    pub mixtures: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub patience: usize,
    pub log_trajectory: bool,
    pub split: (f64, f64, f64),
    /// Ordered event-name pairs: the first event precedes the second.
    pub trajectories: Vec<(String, String)>,
}

fn opt_parsed<T: std::str::FromStr>(
    section: Option<&Section>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    match section.and_then(|s| s.get(key)) {
        None => Ok(default),
        Some(raw) => raw
            .parse()
            .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc = Doc::parse(text)?;
        let run = doc
            .section("run")
            .ok_or_else(|| CliError::Usage("config needs a [run] section".into()))?;
        let mode: Mode = run
            .require("mode")?
            .parse()
            .map_err(CliError::Usage)?;
        let dataset = PathBuf::from(run.require("dataset")?);
        let out = PathBuf::from(run.require("out")?);
        let seed: u64 = opt_parsed(Some(run), "seed", 0)?;

        let model = doc.section("model");
        let train = doc.section("train");
        let split = doc.section("split");

        let mut trajectories = Vec::new();
        if let Some(s) = doc.section("trajectories") {
            for raw in s.get_all("pair") {
                let (a, b) = raw.split_once(',').ok_or_else(|| {
                    CliError::Usage(format!("trajectory pair `{raw}` must be `earlier,later`"))
                })?;
                trajectories.push((a.trim().to_string(), b.trim().to_string()));
            }
        }

        Ok(RunConfig {
            mode,
            dataset,
            out,
            seed,
            hidden: opt_parsed(model, "hidden", 32)?,
            mixtures: opt_parsed(model, "mixtures", 1)?,
            dropout: opt_parsed(model, "dropout", 0.25)?,
            batch_size: opt_parsed(train, "batch_size", 32)?,
            learning_rate: opt_parsed(train, "learning_rate", 1e-3)?,
            weight_decay: opt_parsed(train, "weight_decay", 1e-2)?,
            epochs: opt_parsed(train, "epochs", 1000)?,
            patience: opt_parsed(train, "patience", 10)?,
            log_trajectory: opt_parsed(train, "log_trajectory", false)?,
            split: (
                opt_parsed(split, "train", 0.7)?,
                opt_parsed(split, "valid", 0.1)?,
                opt_parsed(split, "test", 0.2)?,
            ),
            trajectories,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Render the configuration back to config-file text.
    pub fn to_text(&self) -> String {
        let mut doc = Doc::new();
        let s = doc.push("run");
        s.set("mode", self.mode);
        s.set("dataset", self.dataset.display());
        s.set("out", self.out.display());
        s.set("seed", self.seed);
        let s = doc.push("model");
        s.set("hidden", self.hidden);
        s.set("mixtures", self.mixtures);
        s.set("dropout", self.dropout);
        let s = doc.push("train");
        s.set("batch_size", self.batch_size);
        s.set("learning_rate", self.learning_rate);
        s.set("weight_decay", self.weight_decay);
        s.set("epochs", self.epochs);
        s.set("patience", self.patience);
        s.set("log_trajectory", self.log_trajectory);
        let s = doc.push("split");
        s.set("train", self.split.0);
        s.set("valid", self.split.1);
        s.set("test", self.split.2);
        if !self.trajectories.is_empty() {
            let s = doc.push("trajectories");
            for (a, b) in &self.trajectories {
                s.set("pair", format!("{a},{b}"));
            }
        }
        doc.to_string()
    }
}
