//! The scalar-operation trait shared by tape and plain-f64 evaluation.

use super::DiffError;

pub(crate) const SELU_LAMBDA: f64 = 1.0507009873554805;
pub(crate) const SELU_ALPHA: f64 = 1.6732632423543772;

pub(crate) fn relu6_val(x: f64) -> f64 {
    x.clamp(0.0, 6.0)
}

pub(crate) fn selu_val(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
    }
}

pub(crate) fn logsumexp_val(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + sum.ln()
}

/// Scalar arithmetic over an abstract value type.
///
/// [`Plain`] evaluates immediately on `f64`; [`super::Graph`] records the
/// same operations on the tape and returns node ids. Likelihoods and model
/// forward passes are written once against this trait so the value computed
/// in prediction mode is, by construction, the value differentiated in
/// training mode.
pub trait Algebra {
    type Value: Copy;

    /// A non-differentiable constant.
    fn lit(&mut self, v: f64) -> Self::Value;
    /// A differentiable input (a tape leaf in graph mode).
    fn input(&mut self, v: f64) -> Self::Value;
    /// Current numeric value, for diagnostics and finiteness checks.
    fn value(&self, v: Self::Value) -> f64;

    fn add(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn sub(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn mul(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn neg(&mut self, a: Self::Value) -> Self::Value;
    fn exp(&mut self, a: Self::Value) -> Self::Value;
    fn ln(&mut self, a: Self::Value) -> Result<Self::Value, DiffError>;
    fn relu6(&mut self, a: Self::Value) -> Self::Value;
    fn selu(&mut self, a: Self::Value) -> Self::Value;
    /// `min(a, c)` with a constant threshold; the overflow clamp.
    fn min_const(&mut self, a: Self::Value, c: f64) -> Self::Value;
    fn mul_const(&mut self, a: Self::Value, c: f64) -> Self::Value;
    /// Inner product of two equal-length slices.
    fn dot(&mut self, xs: &[Self::Value], ws: &[Self::Value]) -> Self::Value;
    fn logsumexp(&mut self, xs: &[Self::Value]) -> Self::Value;
    fn sum(&mut self, xs: &[Self::Value]) -> Self::Value;
}

/// Immediate `f64` evaluation: no tape, no gradients.
#[derive(Debug, Default, Clone, Copy)]
pub struct Plain;

impl Algebra for Plain {
    type Value = f64;

    fn lit(&mut self, v: f64) -> f64 {
        v
    }
    fn input(&mut self, v: f64) -> f64 {
        v
    }
    fn value(&self, v: f64) -> f64 {
        v
    }
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn neg(&mut self, a: f64) -> f64 {
        -a
    }
    fn exp(&mut self, a: f64) -> f64 {
        a.exp()
    }
    fn ln(&mut self, a: f64) -> Result<f64, DiffError> {
        if a <= 0.0 {
            return Err(DiffError::Domain {
                op: "ln",
                node: None,
                value: a,
            });
        }
        Ok(a.ln())
    }
    fn relu6(&mut self, a: f64) -> f64 {
        relu6_val(a)
    }
    fn selu(&mut self, a: f64) -> f64 {
        selu_val(a)
    }
    fn min_const(&mut self, a: f64, c: f64) -> f64 {
        a.min(c)
    }
    fn mul_const(&mut self, a: f64, c: f64) -> f64 {
        a * c
    }
    fn dot(&mut self, xs: &[f64], ws: &[f64]) -> f64 {
        debug_assert_eq!(xs.len(), ws.len());
        xs.iter().zip(ws).map(|(x, w)| x * w).sum()
    }
    fn logsumexp(&mut self, xs: &[f64]) -> f64 {
        logsumexp_val(xs)
    }
    fn sum(&mut self, xs: &[f64]) -> f64 {
        xs.iter().sum()
    }
}
