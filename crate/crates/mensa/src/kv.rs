//! Flat `key = value` documents with `[section]` headers.
//!
//! Every structured text file this crate reads or writes (run configs,
//! ground-truth sidecars, serialized models, metric reports, training logs)
//! uses this format. Writing is fully deterministic: sections and keys keep
//! insertion order, floats are printed with 17 significant digits so a
//! parse/print round trip is bit-exact.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("section [{section}]: missing key `{key}`")]
    MissingKey { section: String, key: String },
    #[error("section [{section}], key `{key}`: cannot parse `{value}` as {ty}")]
    BadValue {
        section: String,
        key: String,
        value: String,
        ty: &'static str,
    },
}

/// Format an `f64` with 17 significant digits so that parsing the result
/// recovers the exact same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct Doc {
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    entries: Vec<(String, String)>,
}

impl Doc {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a new section and return it for population.
    pub fn push(&mut self, name: &str) -> &mut Section {
        self.sections.push(Section {
            name: name.to_string(),
            entries: Vec::new(),
        });
        self.sections.last_mut().unwrap()
    }

    /// First section with the given name.
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Section, KvError> {
        self.section(name)
            .ok_or_else(|| KvError::MissingSection(name.to_string()))
    }

    /// All sections whose name matches, in document order.
    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> {
        self.sections.iter().filter(move |s| s.name == name)
    }

    /// All sections whose name starts with the given prefix, in order.
    pub fn sections_prefixed<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Section> {
        self.sections.iter().filter(move |s| s.name.starts_with(prefix))
    }

    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut doc = Doc::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('[') {
                let name = header.strip_suffix(']').ok_or_else(|| KvError::Parse {
                    line,
                    msg: "unterminated section header".into(),
                })?;
                doc.push(name.trim());
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| KvError::Parse {
                line,
                msg: format!("expected `key = value`, got `{trimmed}`"),
            })?;
            let section = doc.sections.last_mut().ok_or_else(|| KvError::Parse {
                line,
                msg: "key/value pair before any [section] header".into(),
            })?;
            section
                .entries
                .push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(doc)
    }
}

impl fmt::Display for Doc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "[{}]", section.name)?;
            for (k, v) in &section.entries {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

impl Section {
    pub fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, fmt_f64(value));
    }

    /// Write a comma-joined list of full-precision floats.
    pub fn set_f64_list(&mut self, key: &str, values: &[f64]) {
        let joined = values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",");
        self.set(key, joined);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn require_parsed<T: std::str::FromStr>(
        &self,
        key: &str,
        ty: &'static str,
    ) -> Result<T, KvError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| KvError::BadValue {
            section: self.name.clone(),
            key: key.to_string(),
            value: raw.to_string(),
            ty,
        })
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, KvError> {
        self.require_parsed(key, "f64")
    }

    pub fn require_usize(&self, key: &str) -> Result<usize, KvError> {
        self.require_parsed(key, "usize")
    }

    pub fn require_f64_list(&self, key: &str) -> Result<Vec<f64>, KvError> {
        let raw = self.require(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|tok| {
                tok.trim().parse().map_err(|_| KvError::BadValue {
                    section: self.name.clone(),
                    key: key.to_string(),
                    value: tok.to_string(),
                    ty: "f64",
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let values = [
            0.0,
            1.0,
            -1.0,
            std::f64::consts::PI,
            1e-300,
            -3.537561098123e104,
            f64::MIN_POSITIVE,
        ];
        for &v in &values {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "value {v} via {s}");
        }
    }

    #[test]
    fn parse_print_round_trip() {
        let mut doc = Doc::new();
        let s = doc.push("config");
        s.set("mode", "multi");
        s.set_f64("lr", 1e-3);
        let s = doc.push("pair");
        s.set("a", "x");
        let text = doc.to_string();
        let again = Doc::parse(&text).unwrap();
        assert_eq!(text, again.to_string());
        assert_eq!(again.require("config").unwrap().require_f64("lr").unwrap(), 1e-3);
    }

    #[test]
    fn rejects_orphan_keys() {
        assert!(Doc::parse("a = b\n").is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let doc = Doc::parse("# heading\n\n[s]\n# inner\nk = v\n").unwrap();
        assert_eq!(doc.section("s").unwrap().get("k"), Some("v"));
    }
}
