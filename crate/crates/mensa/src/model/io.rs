//! Model serialization: a structured-text document with the network shape
//! and every parameter tensor at full precision. Round trips are bit-exact.

use std::path::Path;

use super::{MensaConfig, MensaModel, ModelError};
use crate::diff::{ParamStore, Tensor};
use crate::kv::{fmt_f64, Doc};

/// Append `[network]` and `[param <name>]` sections describing the model.
pub fn model_to_doc(model: &MensaModel, doc: &mut Doc) {
    let cfg = model.config();
    let s = doc.push("network");
    s.set("features", cfg.features);
    s.set("states", cfg.states);
    s.set("mixtures", cfg.mixtures);
    s.set("hidden", cfg.hidden);
    s.set_f64("dropout", cfg.dropout);
    s.set("seed", cfg.seed);
    for (name, tensor) in model.params().iter() {
        let s = doc.push(&format!("param {name}"));
        let shape = tensor
            .shape()
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        s.set("shape", shape);
        let data = tensor
            .data()
            .iter()
            .map(|&v| fmt_f64(v))
            .collect::<Vec<_>>()
            .join(",");
        s.set("data", data);
    }
}

/// Rebuild a model from its serialized sections, checking that exactly the
/// expected parameters are present with the expected shapes.
pub fn model_from_doc(doc: &Doc) -> Result<MensaModel, ModelError> {
    let n = doc.require("network")?;
    let config = MensaConfig {
        features: n.require_usize("features")?,
        states: n.require_usize("states")?,
        mixtures: n.require_usize("mixtures")?,
        hidden: n.require_usize("hidden")?,
        dropout: n.require_f64("dropout")?,
        seed: n.require_parsed("seed", "u64")?,
    };
    config.validate()?;

    let mut params = ParamStore::new();
    let mut count = 0usize;
    for section in doc.sections_prefixed("param ") {
        let name = section.name.trim_start_matches("param ").to_string();
        let shape: Vec<usize> = section
            .require("shape")?
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| ModelError::Format(format!("bad shape `{tok}` for `{name}`")))
            })
            .collect::<Result<_, _>>()?;
        let data = section.require_f64_list("data")?;
        let tensor = Tensor::from_vec(&shape, data)?;
        params.insert(&name, tensor)?;
        count += 1;
    }

    // verify against the layout init would produce
    let expected = expected_layout(&config);
    if count != expected.len() {
        return Err(ModelError::Format(format!(
            "expected {} parameter tensors, found {count}",
            expected.len()
        )));
    }
    for (name, shape) in &expected {
        match params.get(name) {
            None => return Err(ModelError::Format(format!("missing parameter `{name}`"))),
            Some(t) if t.shape() != shape.as_slice() => {
                return Err(ModelError::Format(format!(
                    "parameter `{name}` has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
            Some(_) => {}
        }
    }
    MensaModel::from_parts(config, params)
}

fn expected_layout(cfg: &MensaConfig) -> Vec<(String, Vec<usize>)> {
    let (d, h, psi) = (cfg.features, cfg.hidden, cfg.mixtures);
    let mut out = vec![
        ("shared.w".to_string(), vec![h, d]),
        ("shared.b".to_string(), vec![h]),
    ];
    for p in 0..cfg.states {
        out.push((format!("state{p}.scale_bias"), vec![psi]));
        out.push((format!("state{p}.shape_bias"), vec![psi]));
        out.push((format!("state{p}.scale_proj"), vec![psi, h]));
        out.push((format!("state{p}.shape_proj"), vec![psi, h]));
        out.push((format!("state{p}.gate"), vec![psi, h]));
    }
    out
}

pub fn save_model(model: &MensaModel, path: &Path) -> Result<(), ModelError> {
    let mut doc = Doc::new();
    model_to_doc(model, &mut doc);
    std::fs::write(path, doc.to_string())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MensaModel, ModelError> {
    let text = std::fs::read_to_string(path)?;
    let doc = Doc::parse(&text)?;
    model_from_doc(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let config = MensaConfig {
            features: 4,
            states: 3,
            mixtures: 2,
            hidden: 5,
            dropout: 0.25,
            seed: 42,
        };
        let model = MensaModel::init(config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(model.config(), back.config());
        for ((na, ta), (nb, tb)) in model.params().iter().zip(back.params().iter()) {
            assert_eq!(na, nb);
            assert_eq!(ta.shape(), tb.shape());
            for (a, b) in ta.data().iter().zip(tb.data()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        // and the serialized text itself is reproducible
        let mut doc2 = Doc::new();
        model_to_doc(&back, &mut doc2);
        let mut doc1 = Doc::new();
        model_to_doc(&model, &mut doc1);
        assert_eq!(doc1.to_string(), doc2.to_string());
    }

    #[test]
    fn missing_parameter_is_detected() {
        let config = MensaConfig {
            features: 2,
            states: 2,
            mixtures: 1,
            hidden: 2,
            dropout: 0.0,
            seed: 0,
        };
        let model = MensaModel::init(config).unwrap();
        let mut doc = Doc::new();
        model_to_doc(&model, &mut doc);
        doc.sections.retain(|s| s.name != "param state1.gate");
        assert!(matches!(model_from_doc(&doc), Err(ModelError::Format(_))));
    }
}
