//! Message-passing encoders with per-edge weights, sum readout and the
//! classifier head.
//!
//! Both families aggregate over the two directions of every undirected edge,
//! scaling each message by the edge's weight. The GIN layer computes
//! `h_v' = MLP((1 + eps) * h_v + sum_u w_uv * h_u)` with a trainable `eps`
//! and ReLU between the two MLP linears. The GCN alternative folds the edge
//! weights into the degree normalization.

use crate::autodiff::{Tape, TensorId};
use crate::error::{Error, Result};
use crate::graph::Batch;
use crate::model::{GnnKind, ParamSet, PassBinding};

/// One message-passing network within the bound parameter set.
pub struct GnnSpec<'a> {
    pub set: &'a ParamSet,
    pub binding: &'a PassBinding,
    pub prefix: &'a str,
    pub kind: GnnKind,
    pub layers: usize,
}

impl<'a> GnnSpec<'a> {
    fn leaf(&self, tail: &str) -> Result<TensorId> {
        self.binding
            .leaf(self.set, &format!("{}.{}", self.prefix, tail))
    }
}

/// Column-broadcast a `[r, 1]` tensor to `[r, width]` via a constant ones
/// row; gradients flow back as a row sum.
fn broadcast_cols(tape: &mut Tape, col: TensorId, width: usize) -> Result<TensorId> {
    let ones = tape.constant(vec![1.0; width], vec![1, width])?;
    tape.matmul(col, ones)
}

const LAYER_NORM_EPS: f64 = 1e-5;

/// Row-wise normalization to zero mean and unit variance. Constant node
/// features leave sum aggregation with activations that grow with degree
/// per layer; without a normalizer the optimization crawls. Unlike batch
/// normalization this is stateless, so train and eval see the same map.
pub fn layer_norm(tape: &mut Tape, x: TensorId) -> Result<TensorId> {
    let shape = tape.shape(x).to_vec();
    let (rows, cols) = match shape[..] {
        [r, c] => (r, c),
        _ => return Err(Error::contract("layer_norm expects a 2-d tensor")),
    };
    let mu = tape.row_sum(x)?;
    let mu = tape.scalar_mul(mu, 1.0 / cols as f64)?;
    let mu_b = broadcast_cols(tape, mu, cols)?;
    let centered = tape.sub(x, mu_b)?;
    let sq = tape.square(centered)?;
    let var = tape.row_sum(sq)?;
    let var = tape.scalar_mul(var, 1.0 / cols as f64)?;
    let eps = tape.constant(vec![LAYER_NORM_EPS; rows], vec![rows, 1])?;
    let var = tape.add(var, eps)?;
    let log_var = tape.log(var)?;
    let inv_std = tape.scalar_mul(log_var, -0.5)?;
    let inv_std = tape.exp(inv_std)?;
    let inv_b = broadcast_cols(tape, inv_std, cols)?;
    tape.mul(centered, inv_b)
}

/// Node features as a constant leaf.
pub fn feature_leaf(tape: &mut Tape, batch: &Batch) -> Result<TensorId> {
    tape.constant(
        batch.features.clone(),
        vec![batch.total_nodes, batch.feature_dim],
    )
}

/// Constant all-ones edge weights (the unpruned graph).
pub fn unit_edge_weights(tape: &mut Tape, batch: &Batch) -> Result<TensorId> {
    tape.constant(vec![1.0; batch.num_edges()], vec![batch.num_edges(), 1])
}

/// Run the network over the batch with one weight per undirected edge,
/// returning node embeddings of shape `[total_nodes, hidden]`.
pub fn encode(
    tape: &mut Tape,
    batch: &Batch,
    edge_weights: TensorId,
    gnn: &GnnSpec,
) -> Result<TensorId> {
    let m = batch.num_edges();
    if tape.shape(edge_weights) != [m, 1] {
        return Err(Error::contract(format!(
            "edge weight shape {:?} does not match {} undirected edges",
            tape.shape(edge_weights),
            m
        )));
    }
    let n = batch.total_nodes;
    // one weight slot per directed edge, shared with its reverse
    let w_dir = tape.gather_rows(edge_weights, batch.directed_to_undirected.clone())?;

    let mut h = feature_leaf(tape, batch)?;
    for l in 0..gnn.layers {
        let d_in = tape.shape(h)[1];
        let h_src = tape.gather_rows(h, batch.directed_src.clone())?;
        match gnn.kind {
            GnnKind::Gin => {
                let w_exp = broadcast_cols(tape, w_dir, d_in)?;
                let msg = tape.mul(w_exp, h_src)?;
                let agg = tape.scatter_add_rows(msg, batch.directed_dst.clone(), n)?;

                let eps = gnn.leaf(&format!("l{l}.eps"))?;
                let one = tape.constant(vec![1.0], vec![1, 1])?;
                let one_plus = tape.add(eps, one)?;
                let eps_row = broadcast_cols(tape, one_plus, d_in)?;
                let ones_col = tape.constant(vec![1.0; n], vec![n, 1])?;
                let eps_full = tape.matmul(ones_col, eps_row)?;
                let self_term = tape.mul(eps_full, h)?;

                let z = tape.add(self_term, agg)?;
                let a1 = tape.matmul(z, gnn.leaf(&format!("l{l}.w1"))?)?;
                let a1 = tape.add_bias(a1, gnn.leaf(&format!("l{l}.b1"))?)?;
                let a1 = layer_norm(tape, a1)?;
                let r = tape.relu(a1)?;
                let a2 = tape.matmul(r, gnn.leaf(&format!("l{l}.w2"))?)?;
                h = tape.add_bias(a2, gnn.leaf(&format!("l{l}.b2"))?)?;
            }
            GnnKind::Gcn => {
                // weighted degree with a unit self-loop
                let deg_in = tape.scatter_add_rows(w_dir, batch.directed_dst.clone(), n)?;
                let ones_col = tape.constant(vec![1.0; n], vec![n, 1])?;
                let deg = tape.add(deg_in, ones_col)?;
                let log_deg = tape.log(deg)?;
                let inv_sqrt = tape.scalar_mul(log_deg, -0.5)?;
                let inv_sqrt = tape.exp(inv_sqrt)?;

                let c_src = tape.gather_rows(inv_sqrt, batch.directed_src.clone())?;
                let c_dst = tape.gather_rows(inv_sqrt, batch.directed_dst.clone())?;
                let c_pair = tape.mul(c_src, c_dst)?;
                let coef = tape.mul(w_dir, c_pair)?;
                let coef_exp = broadcast_cols(tape, coef, d_in)?;
                let msg = tape.mul(coef_exp, h_src)?;
                let agg = tape.scatter_add_rows(msg, batch.directed_dst.clone(), n)?;

                let self_coef = tape.scalar_mul(log_deg, -1.0)?;
                let self_coef = tape.exp(self_coef)?;
                let self_exp = broadcast_cols(tape, self_coef, d_in)?;
                let self_term = tape.mul(self_exp, h)?;

                let z = tape.add(self_term, agg)?;
                let a = tape.matmul(z, gnn.leaf(&format!("l{l}.w"))?)?;
                let a = tape.add_bias(a, gnn.leaf(&format!("l{l}.b"))?)?;
                h = if l + 1 < gnn.layers {
                    let a = layer_norm(tape, a)?;
                    tape.relu(a)?
                } else {
                    a
                };
            }
        }
    }
    Ok(h)
}

/// Sum-pool node embeddings per graph.
pub fn readout_sum(tape: &mut Tape, node_embeddings: TensorId, batch: &Batch) -> Result<TensorId> {
    tape.scatter_add_rows(
        node_embeddings,
        batch.node_to_graph.clone(),
        batch.num_graphs,
    )
}

/// Affine classifier head; losses take raw logits.
pub fn predict_logits(
    tape: &mut Tape,
    graph_embeddings: TensorId,
    set: &ParamSet,
    binding: &PassBinding,
) -> Result<TensorId> {
    let w = binding.leaf(set, "clf.w")?;
    let b = binding.leaf(set, "clf.b")?;
    let z = tape.matmul(graph_embeddings, w)?;
    tape.add_bias(z, b)
}
