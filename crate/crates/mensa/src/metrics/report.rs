//! Evaluation report, one file per run.

use std::path::Path;

use super::MetricError;
use crate::kv::Doc;

#[derive(Debug, Clone, PartialEq)]
pub struct EventMetrics {
    pub event: String,
    pub harrell_ci: Option<f64>,
    pub ibs: f64,
    pub margin_mae: f64,
    pub d_cal_p: f64,
    pub d_cal_pass: bool,
    pub survival_l1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub mode: String,
    pub events: Vec<EventMetrics>,
    pub global_ci: Option<f64>,
    pub local_ci: Option<f64>,
    pub mean_ibs: f64,
    pub mean_margin_mae: f64,
    pub d_cal_passes: usize,
}

impl MetricReport {
    pub fn to_doc(&self) -> Doc {
        let mut doc = Doc::new();
        let s = doc.push("report");
        s.set("mode", &self.mode);
        if let Some(v) = self.global_ci {
            s.set_f64("global_ci", v);
        }
        if let Some(v) = self.local_ci {
            s.set_f64("local_ci", v);
        }
        s.set_f64("mean_ibs", self.mean_ibs);
        s.set_f64("mean_margin_mae", self.mean_margin_mae);
        s.set("d_cal_passes", self.d_cal_passes);
        s.set("events", self.events.len());
        for ev in &self.events {
            let s = doc.push(&format!("event {}", ev.event));
            if let Some(v) = ev.harrell_ci {
                s.set_f64("harrell_ci", v);
            }
            s.set_f64("ibs", ev.ibs);
            s.set_f64("margin_mae", ev.margin_mae);
            s.set_f64("d_cal_p", ev.d_cal_p);
            s.set("d_cal_pass", ev.d_cal_pass);
            if let Some(v) = ev.survival_l1 {
                s.set_f64("survival_l1", v);
            }
        }
        doc
    }

    pub fn from_doc(doc: &Doc) -> Result<Self, MetricError> {
        let head = doc.require("report")?;
        let parse_opt = |s: &crate::kv::Section, key: &str| -> Result<Option<f64>, MetricError> {
            match s.get(key) {
                Some(_) => Ok(Some(s.require_f64(key)?)),
                None => Ok(None),
            }
        };
        let mut events = Vec::new();
        for section in doc.sections_prefixed("event ") {
            let name = section.name.trim_start_matches("event ").to_string();
            events.push(EventMetrics {
                event: name,
                harrell_ci: parse_opt(section, "harrell_ci")?,
                ibs: section.require_f64("ibs")?,
                margin_mae: section.require_f64("margin_mae")?,
                d_cal_p: section.require_f64("d_cal_p")?,
                d_cal_pass: section.require("d_cal_pass")? == "true",
                survival_l1: parse_opt(section, "survival_l1")?,
            });
        }
        Ok(MetricReport {
            mode: head.require("mode")?.to_string(),
            events,
            global_ci: parse_opt(head, "global_ci")?,
            local_ci: parse_opt(head, "local_ci")?,
            mean_ibs: head.require_f64("mean_ibs")?,
            mean_margin_mae: head.require_f64("mean_margin_mae")?,
            d_cal_passes: head.require_usize("d_cal_passes")?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), MetricError> {
        std::fs::write(path, self.to_doc().to_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_doc(&Doc::parse(&text)?)
    }
}
