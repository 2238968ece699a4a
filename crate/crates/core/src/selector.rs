//! Subgraph selector: per-edge logits, Gumbel-Softmax sampling with a
//! straight-through estimator, normalized edge probabilities and bottom-K
//! selection.
//!
//! The selector owns an independent GNN. Edge logits come from an MLP over
//! `[h_u || h_v || h_u * h_v]`, symmetrized over the two node orders so both
//! directions of an undirected edge share one logit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, TensorId};
use crate::encoder::{encode, unit_edge_weights, GnnSpec};
use crate::error::{Error, Result};
use crate::graph::Batch;

/// Tape ids of one selector pass.
pub struct SelectorOutput {
    /// Logit per undirected edge, `[m, 1]`.
    pub w: TensorId,
    /// Relaxed probability per edge.
    pub p: TensorId,
    /// Edge weights entering the encoder: binary forward values in train
    /// mode (straight-through), equal to `p` in eval mode.
    pub a_tilde: TensorId,
    /// Per-graph normalized probabilities, summing to one per graph.
    pub p_hat: TensorId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    Train,
    Eval,
}

fn edge_mlp(tape: &mut Tape, gnn: &GnnSpec, x: TensorId) -> Result<TensorId> {
    let w1 = gnn.binding.leaf(gnn.set, "sel.edge.w1")?;
    let b1 = gnn.binding.leaf(gnn.set, "sel.edge.b1")?;
    let w2 = gnn.binding.leaf(gnn.set, "sel.edge.w2")?;
    let b2 = gnn.binding.leaf(gnn.set, "sel.edge.b2")?;
    let a1 = tape.matmul(x, w1)?;
    let a1 = tape.add_bias(a1, b1)?;
    let r = tape.relu(a1)?;
    let a2 = tape.matmul(r, w2)?;
    tape.add_bias(a2, b2)
}

/// Symmetric logit per undirected edge. The selector GNN runs on the intact
/// graph (all edge weights one).
pub fn edge_logits(tape: &mut Tape, batch: &Batch, gnn: &GnnSpec) -> Result<TensorId> {
    let ones = unit_edge_weights(tape, batch)?;
    let h = encode(tape, batch, ones, gnn)?;
    let h_u = tape.gather_rows(h, batch.edge_u.clone())?;
    let h_v = tape.gather_rows(h, batch.edge_v.clone())?;
    let prod = tape.mul(h_u, h_v)?;

    let cat_uv = tape.concat_last_dim(&[h_u, h_v, prod])?;
    let raw_uv = edge_mlp(tape, gnn, cat_uv)?;
    let cat_vu = tape.concat_last_dim(&[h_v, h_u, prod])?;
    let raw_vu = edge_mlp(tape, gnn, cat_vu)?;

    let sum = tape.add(raw_uv, raw_vu)?;
    tape.scalar_mul(sum, 0.5)
}

/// Sample relaxed and straight-through edge weights from fixed uniforms.
/// With `straight_through` the forward value of the second output is binary
/// (threshold 0.5) while its gradient equals the gradient of `p`.
pub fn sample_with_uniforms(
    tape: &mut Tape,
    w: TensorId,
    tau: f64,
    uniforms: &[f64],
    straight_through: bool,
) -> Result<(TensorId, TensorId)> {
    if tau <= 0.0 {
        return Err(Error::contract(format!("temperature must be positive, got {tau}")));
    }
    let m = tape.shape(w)[0];
    if uniforms.len() != m {
        return Err(Error::contract(format!(
            "{} uniforms for {} edges",
            uniforms.len(),
            m
        )));
    }
    let noise: Vec<f64> = uniforms
        .iter()
        .map(|&u| {
            let u = u.clamp(1e-12, 1.0 - 1e-12);
            u.ln() - (1.0 - u).ln()
        })
        .collect();
    let noise = tape.constant(noise, vec![m, 1])?;
    let z = tape.add(w, noise)?;
    let z = tape.scalar_mul(z, 1.0 / tau)?;
    let p = tape.sigmoid(z)?;
    if !straight_through {
        return Ok((p, p));
    }
    // hard(p) - sg(p) + p: the correction term is a constant, so the forward
    // value is binary and the gradient is exactly that of p
    let p_vals = tape.value(p).to_vec();
    let correction: Vec<f64> = p_vals
        .iter()
        .map(|&pv| if pv >= 0.5 { 1.0 - pv } else { -pv })
        .collect();
    let c = tape.constant(correction, vec![m, 1])?;
    let a_tilde = tape.add(c, p)?;
    Ok((p, a_tilde))
}

/// Gumbel-Softmax sampling. Train mode draws logistic noise from `rng`;
/// eval mode is deterministic with soft weights `p = sigmoid(w)`.
pub fn gumbel_sample(
    tape: &mut Tape,
    w: TensorId,
    tau: f64,
    mode: SampleMode,
    rng: &mut ChaCha8Rng,
) -> Result<(TensorId, TensorId)> {
    if tau <= 0.0 {
        return Err(Error::contract(format!("temperature must be positive, got {tau}")));
    }
    match mode {
        SampleMode::Train => {
            let m = tape.shape(w)[0];
            let uniforms: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            sample_with_uniforms(tape, w, tau, &uniforms, true)
        }
        SampleMode::Eval => {
            let p = tape.sigmoid(w)?;
            Ok((p, p))
        }
    }
}

/// Per-graph normalization of `sigmoid(w)`; sums to one within each graph.
pub fn normalize_probs(tape: &mut Tape, w: TensorId, batch: &Batch) -> Result<TensorId> {
    for g in 0..batch.num_graphs {
        if batch.graph_edge_count(g) == 0 {
            return Err(Error::contract(format!("graph {g} has no edges to normalize")));
        }
    }
    let s = tape.sigmoid(w)?;
    let denom = tape.scatter_add_rows(s, batch.edge_to_graph.clone(), batch.num_graphs)?;
    // 1 / denom as exp(-log denom); denom > 0 because sigmoid > 0
    let log_d = tape.log(denom)?;
    let neg = tape.scalar_mul(log_d, -1.0)?;
    let inv = tape.exp(neg)?;
    let inv_per_edge = tape.gather_rows(inv, batch.edge_to_graph.clone())?;
    tape.mul(s, inv_per_edge)
}

/// Indices (into the batch edge list) of the lowest-`k_percent` logits per
/// graph, rounded up, ties broken by smaller edge index.
pub fn bottom_k_edges(
    w: &[f64],
    edge_ranges: &[(usize, usize)],
    k_percent: f64,
) -> Result<Vec<Vec<usize>>> {
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(Error::contract(format!(
            "k_percent must lie in (0, 100], got {k_percent}"
        )));
    }
    let mut out = Vec::with_capacity(edge_ranges.len());
    for &(start, end) in edge_ranges {
        let m = end - start;
        let count = ((k_percent / 100.0 * m as f64).ceil() as usize).min(m);
        let mut idx: Vec<usize> = (start..end).collect();
        idx.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
        idx.truncate(count);
        out.push(idx);
    }
    Ok(out)
}

/// Full selector pass: logits, sampling and normalized probabilities.
pub fn selector_forward(
    tape: &mut Tape,
    batch: &Batch,
    gnn: &GnnSpec,
    tau: f64,
    mode: SampleMode,
    rng: &mut ChaCha8Rng,
) -> Result<SelectorOutput> {
    let w = edge_logits(tape, batch, gnn)?;
    let (p, a_tilde) = gumbel_sample(tape, w, tau, mode, rng)?;
    let p_hat = normalize_probs(tape, w, batch)?;
    Ok(SelectorOutput { w, p, a_tilde, p_hat })
}
