//! Named parameter tensors and gradient maps.

use std::collections::HashMap;

use super::DiffError;

/// A flat `f64` buffer with shape metadata. The shape is fixed at creation;
/// only the values may change.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, DiffError> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(DiffError::ShapeMismatch {
                name: format!("{shape:?}"),
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Ordered collection of uniquely named parameter tensors.
///
/// Iteration always follows insertion order, which keeps every consumer
/// (gradient extraction, Adam, serialization) deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<(String, Tensor)>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) -> Result<(), DiffError> {
        if self.index.contains_key(name) {
            return Err(DiffError::DuplicateParam(name.to_string()));
        }
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let idx = *self.index.get(name)?;
        Some(&mut self.entries[idx].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    /// Per-tensor L2 norms, used in failure diagnostics.
    pub fn l2_norms(&self) -> Vec<(String, f64)> {
        self.entries
            .iter()
            .map(|(n, t)| {
                let sq: f64 = t.data().iter().map(|v| v * v).sum();
                (n.clone(), sq.sqrt())
            })
            .collect()
    }
}

/// Gradients keyed by parameter name, aligned with a [`ParamStore`].
#[derive(Debug, Clone, Default)]
pub struct GradientMap {
    entries: Vec<(String, Vec<f64>)>,
    index: HashMap<String, usize>,
}

impl GradientMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, grad: Vec<f64>) -> Result<(), DiffError> {
        if self.index.contains_key(name) {
            return Err(DiffError::DuplicateParam(name.to_string()));
        }
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), grad));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.index.get(name).map(|&i| self.entries[i].1.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(n, g)| (n.as_str(), g.as_slice()))
    }

    /// Scale every gradient in place (minibatch fraction weighting).
    pub fn scale(&mut self, factor: f64) {
        for (_, g) in &mut self.entries {
            for v in g {
                *v *= factor;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|(_, g)| g.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}
