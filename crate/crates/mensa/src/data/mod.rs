//! Survival dataset model: CSV ingestion, event-free state encoding,
//! stratified splitting and train-fitted preprocessing.

mod csv_io;
mod preprocess;
mod split;

pub use csv_io::{load_csv, load_csv_auto, save_csv};
pub use preprocess::{preprocess_apply, preprocess_fit, FeatureState, PreprocessState};
pub(crate) use preprocess::{preprocess_from_doc, preprocess_to_doc};
pub use split::{split_stratified, SplitSpec};

use ndarray::{Array2, Axis};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: event indicator must be 0 or 1, got `{value}`")]
    BadIndicator { line: usize, value: String },
    #[error("line {line}: observed time must be finite and non-negative, got {value}")]
    BadTime { line: usize, value: f64 },
    #[error("bad header: {0}")]
    Header(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("column `{column}` has no observed values")]
    AllMissing { column: String },
    #[error("column `{column}` is not numeric; run preprocessing first")]
    NonNumericColumn { column: String },
    #[error("column `{column}` contains missing values; run preprocessing first")]
    MissingValues { column: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid split spec: {0}")]
    BadSplit(String),
    #[error("dataset too small: {n} rows, need at least {min}")]
    TooSmall { n: usize, min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// One entry of the feature schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

/// A single feature column. Missing values are `NaN` (numeric) or `None`
/// (categorical); in CSV form both are empty cells.
#[derive(Debug, Clone)]
pub enum FeatureColumn {
    Numeric { name: String, values: Vec<f64> },
    Categorical { name: String, values: Vec<Option<String>> },
}

impl FeatureColumn {
    pub fn name(&self) -> &str {
        match self {
            FeatureColumn::Numeric { name, .. } => name,
            FeatureColumn::Categorical { name, .. } => name,
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureColumn::Numeric { .. } => FeatureKind::Numeric,
            FeatureColumn::Categorical { .. } => FeatureKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FeatureColumn::Numeric { values, .. } => values.len(),
            FeatureColumn::Categorical { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn subset(&self, rows: &[usize]) -> FeatureColumn {
        match self {
            FeatureColumn::Numeric { name, values } => FeatureColumn::Numeric {
                name: name.clone(),
                values: rows.iter().map(|&i| values[i]).collect(),
            },
            FeatureColumn::Categorical { name, values } => FeatureColumn::Categorical {
                name: name.clone(),
                values: rows.iter().map(|&i| values[i].clone()).collect(),
            },
        }
    }
}

/// A multi-event survival dataset: features plus, for each of `K` events,
/// an observed time and an indicator per row.
#[derive(Debug, Clone)]
pub struct MultiEventDataset {
    pub features: Vec<FeatureColumn>,
    /// `N x K` observed times (event time when observed, censor time otherwise).
    pub times: Array2<f64>,
    /// `N x K` event indicators.
    pub observed: Array2<bool>,
    pub event_names: Vec<String>,
}

impl MultiEventDataset {
    pub fn new(
        features: Vec<FeatureColumn>,
        times: Array2<f64>,
        observed: Array2<bool>,
        event_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let (n, k) = times.dim();
        if observed.dim() != (n, k) {
            return Err(DataError::Shape(format!(
                "times {:?} vs indicators {:?}",
                times.dim(),
                observed.dim()
            )));
        }
        if event_names.len() != k {
            return Err(DataError::Shape(format!(
                "{k} time columns but {} event names",
                event_names.len()
            )));
        }
        if k == 0 {
            return Err(DataError::Shape("dataset needs at least one event".into()));
        }
        for col in &features {
            if col.len() != n {
                return Err(DataError::Shape(format!(
                    "feature `{}` has {} rows, expected {n}",
                    col.name(),
                    col.len()
                )));
            }
        }
        for &t in times.iter() {
            if !t.is_finite() || t < 0.0 {
                return Err(DataError::Shape(format!(
                    "observed times must be finite and non-negative, got {t}"
                )));
            }
        }
        Ok(MultiEventDataset {
            features,
            times,
            observed,
            event_names,
        })
    }

    pub fn n(&self) -> usize {
        self.times.nrows()
    }

    pub fn k(&self) -> usize {
        self.times.ncols()
    }

    pub fn schema(&self) -> Vec<FeatureSpec> {
        self.features
            .iter()
            .map(|c| FeatureSpec {
                name: c.name().to_string(),
                kind: c.kind(),
            })
            .collect()
    }

    /// Dense feature matrix. Requires every column to be numeric and fully
    /// observed, i.e. the dataset has been through preprocessing (or was
    /// generated numeric, like the synthetic simulator's output).
    pub fn matrix(&self) -> Result<Array2<f64>, DataError> {
        let n = self.n();
        let d = self.features.len();
        let mut x = Array2::zeros((n, d));
        for (j, col) in self.features.iter().enumerate() {
            match col {
                FeatureColumn::Numeric { name, values } => {
                    for (i, &v) in values.iter().enumerate() {
                        if v.is_nan() {
                            return Err(DataError::MissingValues {
                                column: name.clone(),
                            });
                        }
                        x[(i, j)] = v;
                    }
                }
                FeatureColumn::Categorical { name, .. } => {
                    return Err(DataError::NonNumericColumn {
                        column: name.clone(),
                    });
                }
            }
        }
        Ok(x)
    }

    /// New dataset containing the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> MultiEventDataset {
        MultiEventDataset {
            features: self.features.iter().map(|c| c.subset(rows)).collect(),
            times: self.times.select(Axis(0), rows),
            observed: self.observed.select(Axis(0), rows),
            event_names: self.event_names.clone(),
        }
    }
}

/// The multi-state view of a dataset: `P = K + 1` states where state 0 is
/// the derived event-free state and states `1..=K` are the events.
#[derive(Debug, Clone)]
pub struct StateEncodedDataset {
    /// `N x d` encoded feature matrix.
    pub x: Array2<f64>,
    /// `N x P` per-state observed times.
    pub times: Array2<f64>,
    /// `N x P` per-state indicators.
    pub observed: Array2<bool>,
    /// `["event-free", <event names>...]`.
    pub state_names: Vec<String>,
}

impl StateEncodedDataset {
    pub fn n(&self) -> usize {
        self.times.nrows()
    }

    pub fn states(&self) -> usize {
        self.times.ncols()
    }

    pub fn subset(&self, rows: &[usize]) -> StateEncodedDataset {
        StateEncodedDataset {
            x: self.x.select(Axis(0), rows),
            times: self.times.select(Axis(0), rows),
            observed: self.observed.select(Axis(0), rows),
            state_names: self.state_names.clone(),
        }
    }
}

/// Derive the event-free state (state 0) and produce the `P = K + 1`
/// state-encoded dataset.
///
/// For each row: if no event was observed, state 0 is observed at the
/// largest censored time (the row stayed event-free for as long as it was
/// watched); otherwise state 0 is censored at the earliest observed event
/// time.
pub fn encode_event_free(ds: &MultiEventDataset) -> Result<StateEncodedDataset, DataError> {
    let x = ds.matrix()?;
    let n = ds.n();
    let k = ds.k();
    let p = k + 1;
    let mut times = Array2::zeros((n, p));
    let mut observed = Array2::from_elem((n, p), false);
    for i in 0..n {
        let mut min_event = f64::INFINITY;
        let mut max_censor = f64::NEG_INFINITY;
        let mut any_event = false;
        for j in 0..k {
            let t = ds.times[(i, j)];
            if ds.observed[(i, j)] {
                any_event = true;
                min_event = min_event.min(t);
            } else {
                max_censor = max_censor.max(t);
            }
            times[(i, j + 1)] = t;
            observed[(i, j + 1)] = ds.observed[(i, j)];
        }
        if any_event {
            times[(i, 0)] = min_event;
            observed[(i, 0)] = false;
        } else {
            times[(i, 0)] = max_censor;
            observed[(i, 0)] = true;
        }
    }
    let mut state_names = Vec::with_capacity(p);
    state_names.push("event-free".to_string());
    state_names.extend(ds.event_names.iter().cloned());
    Ok(StateEncodedDataset {
        x,
        times,
        observed,
        state_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn numeric_col(name: &str, values: Vec<f64>) -> FeatureColumn {
        FeatureColumn::Numeric {
            name: name.into(),
            values,
        }
    }

    fn two_event_ds(times: Array2<f64>, observed: Array2<bool>) -> MultiEventDataset {
        let n = times.nrows();
        MultiEventDataset::new(
            vec![numeric_col("age", vec![1.0; n])],
            times,
            observed,
            vec!["nausea".into(), "fatigue".into()],
        )
        .unwrap()
    }

    #[test]
    fn encode_mr_smith() {
        // nausea at t=10 observed, fatigue at t=20 observed
        let ds = two_event_ds(array![[10.0, 20.0]], array![[true, true]]);
        let enc = encode_event_free(&ds).unwrap();
        assert_eq!(enc.states(), 3);
        assert_eq!(enc.times[(0, 0)], 10.0);
        assert!(!enc.observed[(0, 0)]);
        assert_eq!(enc.times[(0, 1)], 10.0);
        assert!(enc.observed[(0, 1)]);
        assert_eq!(enc.times[(0, 2)], 20.0);
        assert!(enc.observed[(0, 2)]);
    }

    #[test]
    fn encode_all_censored_row() {
        let ds = two_event_ds(array![[60.0, 40.0]], array![[false, false]]);
        let enc = encode_event_free(&ds).unwrap();
        assert_eq!(enc.times[(0, 0)], 60.0);
        assert!(enc.observed[(0, 0)]);
    }

    #[test]
    fn encode_single_event() {
        let ds = MultiEventDataset::new(
            vec![numeric_col("age", vec![1.0])],
            array![[5.0]],
            array![[true]],
            vec!["death".into()],
        )
        .unwrap();
        let enc = encode_event_free(&ds).unwrap();
        assert_eq!(enc.times[(0, 0)], 5.0);
        assert!(!enc.observed[(0, 0)]);
        assert_eq!(enc.times[(0, 1)], 5.0);
        assert!(enc.observed[(0, 1)]);
    }

    #[test]
    fn encoding_is_rederivable_from_event_states() {
        // re-deriving state 0 from states 1..K reproduces state 0 exactly
        let times = array![[10.0, 20.0], [60.0, 40.0], [7.0, 3.0], [5.0, 5.0]];
        let observed = array![[true, true], [false, false], [false, true], [true, false]];
        let ds = two_event_ds(times, observed);
        let enc = encode_event_free(&ds).unwrap();
        for i in 0..enc.n() {
            let mut min_event = f64::INFINITY;
            let mut max_censor = f64::NEG_INFINITY;
            let mut any = false;
            for j in 1..enc.states() {
                if enc.observed[(i, j)] {
                    any = true;
                    min_event = min_event.min(enc.times[(i, j)]);
                } else {
                    max_censor = max_censor.max(enc.times[(i, j)]);
                }
            }
            if any {
                assert_eq!(enc.times[(i, 0)], min_event);
                assert!(!enc.observed[(i, 0)]);
            } else {
                assert_eq!(enc.times[(i, 0)], max_censor);
                assert!(enc.observed[(i, 0)]);
            }
        }
    }

    #[test]
    fn matrix_rejects_categorical_and_missing() {
        let ds = MultiEventDataset::new(
            vec![FeatureColumn::Categorical {
                name: "color".into(),
                values: vec![Some("red".into())],
            }],
            array![[1.0]],
            array![[true]],
            vec!["e".into()],
        )
        .unwrap();
        assert!(matches!(
            ds.matrix(),
            Err(DataError::NonNumericColumn { .. })
        ));

        let ds = MultiEventDataset::new(
            vec![numeric_col("age", vec![f64::NAN])],
            array![[1.0]],
            array![[true]],
            vec!["e".into()],
        )
        .unwrap();
        assert!(matches!(ds.matrix(), Err(DataError::MissingValues { .. })));
    }

    #[test]
    fn negative_times_are_rejected() {
        let r = MultiEventDataset::new(
            vec![],
            array![[-1.0]],
            array![[true]],
            vec!["e".into()],
        );
        assert!(r.is_err());
    }
}
