//! The computation tape.

use super::algebra::{logsumexp_val, relu6_val, selu_val, Algebra, SELU_ALPHA, SELU_LAMBDA};
use super::DiffError;

/// Index of a node on the tape. Indices are assigned in creation order, so
/// they double as a topological order: every operand precedes its consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub enum Op {
    /// Differentiable input.
    Leaf,
    /// Non-differentiable constant.
    Const,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    /// `a^b` for `a > 0`.
    Pow(NodeId, NodeId),
    Relu6(NodeId),
    Selu(NodeId),
    /// `min(a, c)` against a constant threshold.
    MinConst(NodeId, f64),
    MulConst(NodeId, f64),
    /// Inner product of two equal-length operand lists.
    Dot(Box<[NodeId]>, Box<[NodeId]>),
    LogSumExp(Box<[NodeId]>),
    Sum(Box<[NodeId]>),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: f64,
}

/// A scalar computation graph with cached forward values.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value
    }

    pub fn op(&self, id: NodeId) -> &Op {
        &self.nodes[id.0].op
    }

    fn push(&mut self, op: Op, value: f64) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, v: f64) -> NodeId {
        self.push(Op::Leaf, v)
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.push(Op::Const, v)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) * self.value(b);
        self.push(Op::Mul(a, b), v)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        let bv = self.value(b);
        if bv == 0.0 {
            return Err(DiffError::Domain {
                op: "div",
                node: Some(b.0),
                value: bv,
            });
        }
        let v = self.value(a) / bv;
        Ok(self.push(Op::Div(a, b), v))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = -self.value(a);
        self.push(Op::Neg(a), v)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).exp();
        self.push(Op::Exp(a), v)
    }

    pub fn ln(&mut self, a: NodeId) -> Result<NodeId, DiffError> {
        let av = self.value(a);
        if av <= 0.0 {
            return Err(DiffError::Domain {
                op: "ln",
                node: Some(a.0),
                value: av,
            });
        }
        Ok(self.push(Op::Ln(a), av.ln()))
    }

    pub fn pow(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        let av = self.value(a);
        if av <= 0.0 {
            return Err(DiffError::Domain {
                op: "pow",
                node: Some(a.0),
                value: av,
            });
        }
        let v = av.powf(self.value(b));
        Ok(self.push(Op::Pow(a, b), v))
    }

    pub fn relu6(&mut self, a: NodeId) -> NodeId {
        let v = relu6_val(self.value(a));
        self.push(Op::Relu6(a), v)
    }

    pub fn selu(&mut self, a: NodeId) -> NodeId {
        let v = selu_val(self.value(a));
        self.push(Op::Selu(a), v)
    }

    pub fn min_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a).min(c);
        self.push(Op::MinConst(a, c), v)
    }

    pub fn mul_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a) * c;
        self.push(Op::MulConst(a, c), v)
    }

    pub fn dot(&mut self, xs: &[NodeId], ws: &[NodeId]) -> NodeId {
        assert_eq!(xs.len(), ws.len(), "dot operand length mismatch");
        let v = xs
            .iter()
            .zip(ws)
            .map(|(&x, &w)| self.value(x) * self.value(w))
            .sum();
        self.push(Op::Dot(xs.into(), ws.into()), v)
    }

    pub fn logsumexp(&mut self, xs: &[NodeId]) -> NodeId {
        let vals: Vec<f64> = xs.iter().map(|&x| self.value(x)).collect();
        let v = logsumexp_val(&vals);
        self.push(Op::LogSumExp(xs.into()), v)
    }

    pub fn sum(&mut self, xs: &[NodeId]) -> NodeId {
        let v = xs.iter().map(|&x| self.value(x)).sum();
        self.push(Op::Sum(xs.into()), v)
    }

    /// Rebind a leaf value. Fails on non-leaf nodes or non-finite values.
    pub fn bind(&mut self, id: NodeId, v: f64) -> Result<(), DiffError> {
        if id.0 >= self.nodes.len() {
            return Err(DiffError::BadNode(id.0, self.nodes.len()));
        }
        if !matches!(self.nodes[id.0].op, Op::Leaf) {
            return Err(DiffError::NotALeaf(id.0));
        }
        if !v.is_finite() {
            return Err(DiffError::NonFinite(v));
        }
        self.nodes[id.0].value = v;
        Ok(())
    }

    /// Recompute every non-leaf value in topological order from the current
    /// leaf bindings. Raises a domain error on `ln`/`pow`/`div` violations or
    /// when any recomputed value is non-finite.
    pub fn eval(&mut self) -> Result<(), DiffError> {
        for idx in 0..self.nodes.len() {
            let value = match &self.nodes[idx].op {
                Op::Leaf | Op::Const => continue,
                Op::Add(a, b) => self.nodes[a.0].value + self.nodes[b.0].value,
                Op::Sub(a, b) => self.nodes[a.0].value - self.nodes[b.0].value,
                Op::Mul(a, b) => self.nodes[a.0].value * self.nodes[b.0].value,
                Op::Div(a, b) => {
                    let bv = self.nodes[b.0].value;
                    if bv == 0.0 {
                        return Err(DiffError::Domain {
                            op: "div",
                            node: Some(b.0),
                            value: bv,
                        });
                    }
                    self.nodes[a.0].value / bv
                }
                Op::Neg(a) => -self.nodes[a.0].value,
                Op::Exp(a) => self.nodes[a.0].value.exp(),
                Op::Ln(a) => {
                    let av = self.nodes[a.0].value;
                    if av <= 0.0 {
                        return Err(DiffError::Domain {
                            op: "ln",
                            node: Some(a.0),
                            value: av,
                        });
                    }
                    av.ln()
                }
                Op::Pow(a, b) => {
                    let av = self.nodes[a.0].value;
                    if av <= 0.0 {
                        return Err(DiffError::Domain {
                            op: "pow",
                            node: Some(a.0),
                            value: av,
                        });
                    }
                    av.powf(self.nodes[b.0].value)
                }
                Op::Relu6(a) => relu6_val(self.nodes[a.0].value),
                Op::Selu(a) => selu_val(self.nodes[a.0].value),
                Op::MinConst(a, c) => self.nodes[a.0].value.min(*c),
                Op::MulConst(a, c) => self.nodes[a.0].value * c,
                Op::Dot(xs, ws) => xs
                    .iter()
                    .zip(ws.iter())
                    .map(|(x, w)| self.nodes[x.0].value * self.nodes[w.0].value)
                    .sum(),
                Op::LogSumExp(xs) => {
                    let vals: Vec<f64> = xs.iter().map(|x| self.nodes[x.0].value).collect();
                    logsumexp_val(&vals)
                }
                Op::Sum(xs) => xs.iter().map(|x| self.nodes[x.0].value).sum(),
            };
            if !value.is_finite() {
                return Err(DiffError::Domain {
                    op: "eval",
                    node: Some(idx),
                    value,
                });
            }
            self.nodes[idx].value = value;
        }
        Ok(())
    }

    /// Bind the given leaves, then run a full forward evaluation.
    pub fn forward_eval(&mut self, bindings: &[(NodeId, f64)]) -> Result<(), DiffError> {
        for &(id, v) in bindings {
            self.bind(id, v)?;
        }
        self.eval()
    }

    /// Reverse sweep from `loss`, accumulating the adjoint of every node.
    /// The pass is a fixed reverse iteration over node indices, so repeated
    /// calls produce bitwise-identical results.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients, DiffError> {
        if loss.0 >= self.nodes.len() {
            return Err(DiffError::BadNode(loss.0, self.nodes.len()));
        }
        let mut adj = vec![0.0f64; self.nodes.len()];
        adj[loss.0] = 1.0;
        for idx in (0..=loss.0).rev() {
            let a = adj[idx];
            if a == 0.0 {
                continue;
            }
            match &self.nodes[idx].op {
                Op::Leaf | Op::Const => {}
                Op::Add(x, y) => {
                    adj[x.0] += a;
                    adj[y.0] += a;
                }
                Op::Sub(x, y) => {
                    adj[x.0] += a;
                    adj[y.0] -= a;
                }
                Op::Mul(x, y) => {
                    adj[x.0] += a * self.nodes[y.0].value;
                    adj[y.0] += a * self.nodes[x.0].value;
                }
                Op::Div(x, y) => {
                    let yv = self.nodes[y.0].value;
                    adj[x.0] += a / yv;
                    adj[y.0] -= a * self.nodes[x.0].value / (yv * yv);
                }
                Op::Neg(x) => adj[x.0] -= a,
                Op::Exp(x) => adj[x.0] += a * self.nodes[idx].value,
                Op::Ln(x) => adj[x.0] += a / self.nodes[x.0].value,
                Op::Pow(x, y) => {
                    let xv = self.nodes[x.0].value;
                    let yv = self.nodes[y.0].value;
                    let out = self.nodes[idx].value;
                    adj[x.0] += a * yv * out / xv;
                    adj[y.0] += a * out * xv.ln();
                }
                Op::Relu6(x) => {
                    let xv = self.nodes[x.0].value;
                    if xv > 0.0 && xv < 6.0 {
                        adj[x.0] += a;
                    }
                }
                Op::Selu(x) => {
                    let xv = self.nodes[x.0].value;
                    let d = if xv > 0.0 {
                        SELU_LAMBDA
                    } else {
                        SELU_LAMBDA * SELU_ALPHA * xv.exp()
                    };
                    adj[x.0] += a * d;
                }
                Op::MinConst(x, c) => {
                    if self.nodes[x.0].value < *c {
                        adj[x.0] += a;
                    }
                }
                Op::MulConst(x, c) => adj[x.0] += a * c,
                Op::Dot(xs, ws) => {
                    for (x, w) in xs.iter().zip(ws.iter()) {
                        adj[x.0] += a * self.nodes[w.0].value;
                        adj[w.0] += a * self.nodes[x.0].value;
                    }
                }
                Op::LogSumExp(xs) => {
                    let out = self.nodes[idx].value;
                    for x in xs.iter() {
                        adj[x.0] += a * (self.nodes[x.0].value - out).exp();
                    }
                }
                Op::Sum(xs) => {
                    for x in xs.iter() {
                        adj[x.0] += a;
                    }
                }
            }
        }
        Ok(Gradients { adj })
    }
}

impl Algebra for Graph {
    type Value = NodeId;

    fn lit(&mut self, v: f64) -> NodeId {
        self.constant(v)
    }
    fn input(&mut self, v: f64) -> NodeId {
        self.leaf(v)
    }
    fn value(&self, v: NodeId) -> f64 {
        Graph::value(self, v)
    }
    fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Graph::add(self, a, b)
    }
    fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Graph::sub(self, a, b)
    }
    fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Graph::mul(self, a, b)
    }
    fn neg(&mut self, a: NodeId) -> NodeId {
        Graph::neg(self, a)
    }
    fn exp(&mut self, a: NodeId) -> NodeId {
        Graph::exp(self, a)
    }
    fn ln(&mut self, a: NodeId) -> Result<NodeId, DiffError> {
        Graph::ln(self, a)
    }
    fn relu6(&mut self, a: NodeId) -> NodeId {
        Graph::relu6(self, a)
    }
    fn selu(&mut self, a: NodeId) -> NodeId {
        Graph::selu(self, a)
    }
    fn min_const(&mut self, a: NodeId, c: f64) -> NodeId {
        Graph::min_const(self, a, c)
    }
    fn mul_const(&mut self, a: NodeId, c: f64) -> NodeId {
        Graph::mul_const(self, a, c)
    }
    fn dot(&mut self, xs: &[NodeId], ws: &[NodeId]) -> NodeId {
        Graph::dot(self, xs, ws)
    }
    fn logsumexp(&mut self, xs: &[NodeId]) -> NodeId {
        Graph::logsumexp(self, xs)
    }
    fn sum(&mut self, xs: &[NodeId]) -> NodeId {
        Graph::sum(self, xs)
    }
}

/// Adjoints of one reverse sweep, indexed by node.
#[derive(Debug, Clone)]
pub struct Gradients {
    adj: Vec<f64>,
}

impl Gradients {
    pub fn wrt(&self, id: NodeId) -> f64 {
        self.adj.get(id.0).copied().unwrap_or(0.0)
    }
}

/// Numerically stable softmax built from the primitive set:
/// `exp(x_i - logsumexp(x))`.
pub fn softmax<A: Algebra>(alg: &mut A, xs: &[A::Value]) -> Vec<A::Value> {
    let lse = alg.logsumexp(xs);
    xs.iter()
        .map(|&x| {
            let shifted = alg.sub(x, lse);
            alg.exp(shifted)
        })
        .collect()
}

/// Inverted-dropout scale factors: each entry is `0` with probability `rate`
/// and `1 / (1 - rate)` otherwise. An empty rate produces all-ones.
pub fn dropout_scales<R: rand::Rng>(rng: &mut R, n: usize, rate: f64) -> Vec<f64> {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    if rate == 0.0 {
        return vec![1.0; n];
    }
    let keep = 1.0 - rate;
    (0..n)
        .map(|_| {
            if rng.gen::<f64>() < rate {
                0.0
            } else {
                1.0 / keep
            }
        })
        .collect()
}
