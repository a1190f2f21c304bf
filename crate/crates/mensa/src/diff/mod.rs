//! Scalar reverse-mode differentiation and the Adam optimizer.
//!
//! The engine is a Wengert tape of `f64` scalars: every operation appends a
//! node holding its operands and cached value, so the node index order *is*
//! a topological order. [`Graph::backward`] replays the tape in reverse to
//! accumulate adjoints.
//!
//! Model code is written once against the [`Algebra`] trait and can then run
//! either on the tape (for gradients) or on [`Plain`] `f64` arithmetic (for
//! predictions and for finite-difference oracles).

mod adam;
mod algebra;
mod graph;
mod param;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use algebra::{Algebra, Plain};
pub use graph::{dropout_scales, softmax, Gradients, Graph, NodeId, Op};
pub use param::{GradientMap, ParamStore, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("domain error in `{op}` at node {node:?}: argument {value}")]
    Domain {
        op: &'static str,
        node: Option<usize>,
        value: f64,
    },
    #[error("node {0} is not a leaf")]
    NotALeaf(usize),
    #[error("node index {0} out of bounds (graph has {1} nodes)")]
    BadNode(usize, usize),
    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("shape mismatch for `{name}`: expected {expected} values, got {got}")]
    ShapeMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("non-finite input: {0}")]
    NonFinite(f64),
}
