//! The network forward pass, written once over [`Algebra`].
//!
//! Running it on [`crate::diff::Plain`] gives prediction values; running it
//! on [`crate::diff::Graph`] builds the differentiable likelihood. Both
//! paths therefore compute the same numbers by construction.

use crate::diff::{Algebra, DiffError, GradientMap, Gradients, Graph, NodeId};

use super::MensaModel;

/// Arguments of `(t / scale)^shape` are clamped here before exponentiation
/// so extreme times saturate instead of overflowing.
pub(crate) const OVERFLOW_CLAMP: f64 = 700.0;

#[derive(Debug)]
pub(crate) struct LiftedHead<V> {
    pub scale_bias: Vec<V>,
    pub shape_bias: Vec<V>,
    /// Row-major `mixtures x hidden`.
    pub scale_proj: Vec<V>,
    pub shape_proj: Vec<V>,
    /// Row-major `mixtures x hidden`: one gating logit per component.
    pub gate: Vec<V>,
}

#[derive(Debug)]
pub(crate) struct LiftedModel<V> {
    pub hidden: usize,
    pub features: usize,
    /// Row-major `hidden x features`.
    pub shared_w: Vec<V>,
    pub shared_b: Vec<V>,
    pub heads: Vec<LiftedHead<V>>,
}

/// Mirror every parameter into the algebra as a differentiable input. The
/// traversal order matches [`MensaModel::init`]'s parameter layout;
/// [`collect_gradients`] relies on walking the same order.
pub(crate) fn lift<A: Algebra>(alg: &mut A, model: &MensaModel) -> LiftedModel<A::Value> {
    let cfg = model.config();
    let mut take = |name: &str| -> Vec<A::Value> {
        model
            .params()
            .get(name)
            .expect("model parameter missing")
            .data()
            .iter()
            .map(|&v| alg.input(v))
            .collect()
    };
    let shared_w = take("shared.w");
    let shared_b = take("shared.b");
    let heads = (0..cfg.states)
        .map(|p| LiftedHead {
            scale_bias: take(&format!("state{p}.scale_bias")),
            shape_bias: take(&format!("state{p}.shape_bias")),
            scale_proj: take(&format!("state{p}.scale_proj")),
            shape_proj: take(&format!("state{p}.shape_proj")),
            gate: take(&format!("state{p}.gate")),
        })
        .collect();
    LiftedModel {
        hidden: cfg.hidden,
        features: cfg.features,
        shared_w,
        shared_b,
        heads,
    }
}

/// Shared representation `relu6(W x + b)`, with optional inverted-dropout
/// scale factors applied unit-wise.
pub(crate) fn hidden_repr<A: Algebra>(
    alg: &mut A,
    lifted: &LiftedModel<A::Value>,
    x: &[f64],
    mask: Option<&[f64]>,
) -> Vec<A::Value> {
    debug_assert_eq!(x.len(), lifted.features);
    let xs: Vec<A::Value> = x.iter().map(|&v| alg.lit(v)).collect();
    let d = lifted.features;
    (0..lifted.hidden)
        .map(|i| {
            let row = &lifted.shared_w[i * d..(i + 1) * d];
            let z = alg.dot(row, &xs);
            let z = alg.add(z, lifted.shared_b[i]);
            let a = alg.relu6(z);
            match mask {
                Some(m) => alg.mul_const(a, m[i]),
                None => a,
            }
        })
        .collect()
}

/// Per-component head outputs for one state: log-scale, log-shape and
/// log-gate (already softmax-normalized in log space).
#[derive(Debug)]
pub(crate) struct HeadValues<V> {
    pub log_scale: Vec<V>,
    pub log_shape: Vec<V>,
    pub log_gate: Vec<V>,
}

pub(crate) fn head_values<A: Algebra>(
    alg: &mut A,
    head: &LiftedHead<A::Value>,
    h: &[A::Value],
    mixtures: usize,
) -> HeadValues<A::Value> {
    let n = h.len();
    let mut log_scale = Vec::with_capacity(mixtures);
    let mut log_shape = Vec::with_capacity(mixtures);
    let mut logits = Vec::with_capacity(mixtures);
    for psi in 0..mixtures {
        let zeta = &head.scale_proj[psi * n..(psi + 1) * n];
        let xi = &head.shape_proj[psi * n..(psi + 1) * n];
        let gw = &head.gate[psi * n..(psi + 1) * n];

        let z = alg.dot(zeta, h);
        let a = alg.selu(z);
        log_scale.push(alg.add(head.scale_bias[psi], a));

        let z = alg.dot(xi, h);
        let a = alg.selu(z);
        log_shape.push(alg.add(head.shape_bias[psi], a));

        logits.push(alg.dot(gw, h));
    }
    let lse = alg.logsumexp(&logits);
    let log_gate = logits.iter().map(|&l| alg.sub(l, lse)).collect();
    HeadValues {
        log_scale,
        log_shape,
        log_gate,
    }
}

/// One Weibull component in log space.
///
/// With `diff = ln t - log_scale` and `shape = exp(log_shape)`:
/// `log S = -exp(min(shape * diff, clamp))` and
/// `log f = log_shape - log_scale + (shape - 1) * diff + log S`.
pub(crate) fn weibull_log_terms<A: Algebra>(
    alg: &mut A,
    log_scale: A::Value,
    log_shape: A::Value,
    ln_t: A::Value,
) -> (A::Value, A::Value) {
    let shape = alg.exp(log_shape);
    let diff = alg.sub(ln_t, log_scale);
    let z_raw = alg.mul(shape, diff);
    let z = alg.min_const(z_raw, OVERFLOW_CLAMP);
    let pow_term = alg.exp(z);
    let log_surv = alg.neg(pow_term);
    // (shape - 1) * diff == z_raw - diff
    let sm1_diff = alg.sub(z_raw, diff);
    let prefix = alg.sub(log_shape, log_scale);
    let prefix = alg.add(prefix, sm1_diff);
    let log_pdf = alg.add(prefix, log_surv);
    (log_pdf, log_surv)
}

/// Mixture log-density and log-survival for one state at `ln t`:
/// `logsumexp` over components of `log g + log f` / `log g + log S`.
pub(crate) fn mixture_log_terms<A: Algebra>(
    alg: &mut A,
    vals: &HeadValues<A::Value>,
    ln_t: A::Value,
) -> (A::Value, A::Value) {
    let psi = vals.log_gate.len();
    let mut pdf_terms = Vec::with_capacity(psi);
    let mut surv_terms = Vec::with_capacity(psi);
    for k in 0..psi {
        let (lf, ls) = weibull_log_terms(alg, vals.log_scale[k], vals.log_shape[k], ln_t);
        pdf_terms.push(alg.add(vals.log_gate[k], lf));
        surv_terms.push(alg.add(vals.log_gate[k], ls));
    }
    (alg.logsumexp(&pdf_terms), alg.logsumexp(&surv_terms))
}

/// Extract gradients from a backward pass into a named map, walking the
/// lifted parameters in the same order [`lift`] created them.
pub(crate) fn collect_gradients(
    lifted: &LiftedModel<NodeId>,
    grads: &Gradients,
) -> Result<GradientMap, DiffError> {
    let mut map = GradientMap::new();
    let mut put = |name: String, ids: &[NodeId]| -> Result<(), DiffError> {
        map.insert(&name, ids.iter().map(|&id| grads.wrt(id)).collect())
    };
    put("shared.w".into(), &lifted.shared_w)?;
    put("shared.b".into(), &lifted.shared_b)?;
    for (p, head) in lifted.heads.iter().enumerate() {
        put(format!("state{p}.scale_bias"), &head.scale_bias)?;
        put(format!("state{p}.shape_bias"), &head.shape_bias)?;
        put(format!("state{p}.scale_proj"), &head.scale_proj)?;
        put(format!("state{p}.shape_proj"), &head.shape_proj)?;
        put(format!("state{p}.gate"), &head.gate)?;
    }
    Ok(map)
}

/// Convenience: lift into a graph and return both.
pub(crate) fn lift_into_graph(model: &MensaModel) -> (Graph, LiftedModel<NodeId>) {
    let mut graph = Graph::new();
    let lifted = lift(&mut graph, model);
    (graph, lifted)
}
