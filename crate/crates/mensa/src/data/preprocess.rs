//! Imputation, z-scoring and one-hot encoding, fit on the training split.

use std::collections::HashMap;

use super::{DataError, FeatureColumn, MultiEventDataset};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureState {
    /// Mean imputation followed by z-scoring. The std is the population
    /// standard deviation of the imputed training column, so applying the
    /// transform back to the training split yields exactly unit variance.
    Numeric { name: String, mean: f64, std: f64 },
    /// Constant on the training split; removed everywhere.
    Dropped { name: String },
    /// Mode imputation followed by one-hot encoding over the training
    /// vocabulary. Unseen categories at apply time map to all zeros.
    Categorical {
        name: String,
        mode: String,
        vocab: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessState {
    pub features: Vec<FeatureState>,
}

impl PreprocessState {
    /// Names of the output columns after applying this state.
    pub fn output_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.features {
            match f {
                FeatureState::Numeric { name, .. } => out.push(name.clone()),
                FeatureState::Dropped { .. } => {}
                FeatureState::Categorical { name, vocab, .. } => {
                    for cat in vocab {
                        out.push(format!("{name}={cat}"));
                    }
                }
            }
        }
        out
    }
}

/// Fit imputation and scaling statistics on the training split only.
pub fn preprocess_fit(train: &MultiEventDataset) -> Result<PreprocessState, DataError> {
    let n = train.n();
    let mut features = Vec::with_capacity(train.features.len());
    for col in &train.features {
        match col {
            FeatureColumn::Numeric { name, values } => {
                let observed: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
                if observed.is_empty() {
                    return Err(DataError::AllMissing {
                        column: name.clone(),
                    });
                }
                let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                // population variance over the imputed column: missing cells
                // sit exactly at the mean and contribute zero deviation
                let var =
                    observed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                if var == 0.0 {
                    log::warn!("feature `{name}` is constant on the training split; dropping");
                    features.push(FeatureState::Dropped { name: name.clone() });
                } else {
                    features.push(FeatureState::Numeric {
                        name: name.clone(),
                        mean,
                        std: var.sqrt(),
                    });
                }
            }
            FeatureColumn::Categorical { name, values } => {
                let mut counts: HashMap<&str, usize> = HashMap::new();
                for v in values.iter().flatten() {
                    *counts.entry(v.as_str()).or_insert(0) += 1;
                }
                if counts.is_empty() {
                    return Err(DataError::AllMissing {
                        column: name.clone(),
                    });
                }
                let mut vocab: Vec<String> = counts.keys().map(|s| s.to_string()).collect();
                vocab.sort();
                // most frequent category; ties resolved lexicographically
                let mode = vocab
                    .iter()
                    .max_by_key(|c| (counts[c.as_str()], std::cmp::Reverse(c.as_str())))
                    .unwrap()
                    .clone();
                features.push(FeatureState::Categorical {
                    name: name.clone(),
                    mode,
                    vocab,
                });
            }
        }
    }
    Ok(PreprocessState { features })
}

/// Apply a fitted state to any dataset with the same raw schema, producing a
/// fully numeric dataset.
pub fn preprocess_apply(
    state: &PreprocessState,
    ds: &MultiEventDataset,
) -> Result<MultiEventDataset, DataError> {
    if state.features.len() != ds.features.len() {
        return Err(DataError::SchemaMismatch(format!(
            "state covers {} features, dataset has {}",
            state.features.len(),
            ds.features.len()
        )));
    }
    let mut out: Vec<FeatureColumn> = Vec::new();
    for (fs, col) in state.features.iter().zip(&ds.features) {
        match (fs, col) {
            (FeatureState::Numeric { name, mean, std }, FeatureColumn::Numeric { name: cn, values })
                if name == cn =>
            {
                let scaled = values
                    .iter()
                    .map(|&v| {
                        let imputed = if v.is_nan() { *mean } else { v };
                        (imputed - mean) / std
                    })
                    .collect();
                out.push(FeatureColumn::Numeric {
                    name: name.clone(),
                    values: scaled,
                });
            }
            (FeatureState::Dropped { name }, FeatureColumn::Numeric { name: cn, .. })
                if name == cn => {}
            (
                FeatureState::Categorical { name, mode, vocab },
                FeatureColumn::Categorical { name: cn, values },
            ) if name == cn => {
                for (slot, cat) in vocab.iter().enumerate() {
                    let encoded = values
                        .iter()
                        .map(|v| {
                            let filled = v.as_deref().unwrap_or(mode.as_str());
                            if filled == cat {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    out.push(FeatureColumn::Numeric {
                        name: format!("{name}={}", vocab[slot]),
                        values: encoded,
                    });
                }
            }
            _ => {
                return Err(DataError::SchemaMismatch(format!(
                    "feature `{}` does not match fitted state entry `{}`",
                    col.name(),
                    match fs {
                        FeatureState::Numeric { name, .. } => name,
                        FeatureState::Dropped { name } => name,
                        FeatureState::Categorical { name, .. } => name,
                    }
                )));
            }
        }
    }
    MultiEventDataset::new(
        out,
        ds.times.clone(),
        ds.observed.clone(),
        ds.event_names.clone(),
    )
}

/// Append `[preprocess <i>]` sections describing a fitted state.
pub fn preprocess_to_doc(state: &PreprocessState, doc: &mut crate::kv::Doc) {
    for (i, f) in state.features.iter().enumerate() {
        let s = doc.push(&format!("preprocess {i}"));
        match f {
            FeatureState::Numeric { name, mean, std } => {
                s.set("kind", "numeric");
                s.set("name", name);
                s.set_f64("mean", *mean);
                s.set_f64("std", *std);
            }
            FeatureState::Dropped { name } => {
                s.set("kind", "dropped");
                s.set("name", name);
            }
            FeatureState::Categorical { name, mode, vocab } => {
                s.set("kind", "categorical");
                s.set("name", name);
                s.set("mode", mode);
                s.set("vocab_size", vocab.len());
                for (j, cat) in vocab.iter().enumerate() {
                    s.set(&format!("cat{j}"), cat);
                }
            }
        }
    }
}

/// Read back `[preprocess <i>]` sections; `None` when the document has none.
pub fn preprocess_from_doc(doc: &crate::kv::Doc) -> Result<Option<PreprocessState>, DataError> {
    let mut features = Vec::new();
    for section in doc.sections_prefixed("preprocess ") {
        let name = section
            .get("name")
            .ok_or_else(|| DataError::SchemaMismatch("preprocess entry without name".into()))?
            .to_string();
        let kind = section.get("kind").unwrap_or("");
        let parse_f64 = |key: &str| -> Result<f64, DataError> {
            section
                .get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| DataError::SchemaMismatch(format!("bad `{key}` for `{name}`")))
        };
        match kind {
            "numeric" => features.push(FeatureState::Numeric {
                mean: parse_f64("mean")?,
                std: parse_f64("std")?,
                name,
            }),
            "dropped" => features.push(FeatureState::Dropped { name }),
            "categorical" => {
                let size: usize = section
                    .get("vocab_size")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| {
                        DataError::SchemaMismatch(format!("bad vocab size for `{name}`"))
                    })?;
                let mut vocab = Vec::with_capacity(size);
                for j in 0..size {
                    vocab.push(
                        section
                            .get(&format!("cat{j}"))
                            .ok_or_else(|| {
                                DataError::SchemaMismatch(format!(
                                    "missing category {j} for `{name}`"
                                ))
                            })?
                            .to_string(),
                    );
                }
                features.push(FeatureState::Categorical {
                    mode: section.get("mode").unwrap_or_default().to_string(),
                    vocab,
                    name,
                });
            }
            other => {
                return Err(DataError::SchemaMismatch(format!(
                    "unknown preprocess kind `{other}`"
                )))
            }
        }
    }
    if features.is_empty() {
        Ok(None)
    } else {
        Ok(Some(PreprocessState { features }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn ds_with(features: Vec<FeatureColumn>) -> MultiEventDataset {
        let n = features[0].len();
        MultiEventDataset::new(
            features,
            Array2::ones((n, 1)),
            Array2::from_elem((n, 1), true),
            vec!["e".into()],
        )
        .unwrap()
    }

    #[test]
    fn mean_centering() {
        let train = ds_with(vec![FeatureColumn::Numeric {
            name: "x".into(),
            values: vec![1.0, 2.0, 3.0],
        }]);
        let state = preprocess_fit(&train).unwrap();
        let applied = preprocess_apply(&state, &train).unwrap();
        match &applied.features[0] {
            FeatureColumn::Numeric { values, .. } => assert_eq!(values[1], 0.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn missing_imputed_with_train_mean() {
        let train = ds_with(vec![FeatureColumn::Numeric {
            name: "x".into(),
            values: vec![1.0, 2.0, 3.0, f64::NAN],
        }]);
        let state = preprocess_fit(&train).unwrap();
        match &state.features[0] {
            FeatureState::Numeric { mean, .. } => assert_eq!(*mean, 2.0),
            other => panic!("unexpected state {other:?}"),
        }
        let applied = preprocess_apply(&state, &train).unwrap();
        match &applied.features[0] {
            FeatureColumn::Numeric { values, .. } => assert_eq!(values[3], 0.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unseen_category_maps_to_all_zeros() {
        let train = ds_with(vec![FeatureColumn::Categorical {
            name: "c".into(),
            values: vec![Some("a".into()), Some("b".into()), Some("a".into())],
        }]);
        let state = preprocess_fit(&train).unwrap();
        let test = ds_with(vec![FeatureColumn::Categorical {
            name: "c".into(),
            values: vec![Some("c".into())],
        }]);
        let applied = preprocess_apply(&state, &test).unwrap();
        assert_eq!(applied.features.len(), 2);
        for col in &applied.features {
            match col {
                FeatureColumn::Numeric { values, .. } => assert_eq!(values[0], 0.0),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn mode_imputation_prefers_most_frequent() {
        let train = ds_with(vec![FeatureColumn::Categorical {
            name: "c".into(),
            values: vec![Some("b".into()), Some("b".into()), Some("a".into()), None],
        }]);
        let state = preprocess_fit(&train).unwrap();
        match &state.features[0] {
            FeatureState::Categorical { mode, vocab, .. } => {
                assert_eq!(mode, "b");
                assert_eq!(vocab, &["a", "b"]);
            }
            other => panic!("unexpected state {other:?}"),
        }
    }

    #[test]
    fn train_split_is_standardized_after_apply() {
        let train = ds_with(vec![
            FeatureColumn::Numeric {
                name: "x".into(),
                values: vec![3.0, -1.0, 0.5, 7.0, 2.2, f64::NAN, -4.1, 0.0],
            },
            FeatureColumn::Numeric {
                name: "y".into(),
                values: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
            },
        ]);
        let state = preprocess_fit(&train).unwrap();
        let applied = preprocess_apply(&state, &train).unwrap();
        for col in &applied.features {
            let values = match col {
                FeatureColumn::Numeric { values, .. } => values,
                _ => unreachable!(),
            };
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-10, "mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-10, "std {}", var.sqrt());
        }
    }

    #[test]
    fn constant_features_are_dropped() {
        let train = ds_with(vec![
            FeatureColumn::Numeric {
                name: "flat".into(),
                values: vec![5.0, 5.0, 5.0],
            },
            FeatureColumn::Numeric {
                name: "x".into(),
                values: vec![1.0, 2.0, 3.0],
            },
        ]);
        let state = preprocess_fit(&train).unwrap();
        let applied = preprocess_apply(&state, &train).unwrap();
        assert_eq!(applied.features.len(), 1);
        assert_eq!(applied.features[0].name(), "x");
    }

    #[test]
    fn all_missing_column_is_an_error() {
        let train = ds_with(vec![FeatureColumn::Numeric {
            name: "x".into(),
            values: vec![f64::NAN, f64::NAN],
        }]);
        match preprocess_fit(&train) {
            Err(DataError::AllMissing { column }) => assert_eq!(column, "x"),
            other => panic!("expected all-missing error, got {other:?}"),
        }
    }

    #[test]
    fn state_document_round_trip() {
        let train = ds_with(vec![
            FeatureColumn::Numeric {
                name: "x".into(),
                values: vec![1.0, 2.5, 4.0],
            },
            FeatureColumn::Numeric {
                name: "flat".into(),
                values: vec![7.0, 7.0, 7.0],
            },
            FeatureColumn::Categorical {
                name: "c".into(),
                values: vec![Some("a".into()), Some("b".into()), None],
            },
        ]);
        let state = preprocess_fit(&train).unwrap();
        let mut doc = crate::kv::Doc::new();
        preprocess_to_doc(&state, &mut doc);
        let text = doc.to_string();
        let back = preprocess_from_doc(&crate::kv::Doc::parse(&text).unwrap())
            .unwrap()
            .unwrap();
        assert_eq!(state, back);
    }
}
