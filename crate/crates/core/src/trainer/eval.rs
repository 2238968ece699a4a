//! Deterministic forward pass over a dataset in evaluation mode.
//!
//! No Gumbel noise: edge weights are the soft probabilities `sigmoid(w)`,
//! or all ones for pure cross-entropy models. Batches are independent, so
//! they evaluate in parallel and concatenate in index order.

use crate::encoder::{encode, predict_logits, readout_sum, unit_edge_weights, GnnSpec};
use crate::error::Result;
use crate::graph::{batch_graphs, Graph};
use crate::metrics::argmax;
use crate::model::{bind_params_frozen, ArchConfig, ParamSet};
use crate::par;
use crate::selector::edge_logits;
use crate::{autodiff::Tape, error::Error};

pub(crate) struct EvalPass {
    pub logits: Vec<f64>,
    pub labels: Vec<usize>,
    pub predictions: Vec<usize>,
    pub correct: Vec<bool>,
    /// Per-edge `sigmoid(w)` in graph order, when the selector ran.
    pub edge_scores: Option<Vec<f64>>,
    pub edge_truth: Option<Vec<bool>>,
    pub edge_ranges: Option<Vec<(usize, usize)>>,
}

struct BatchOut {
    logits: Vec<f64>,
    scores: Option<Vec<f64>>,
    edge_counts: Vec<usize>,
}

pub(crate) fn forward_eval(
    set: &ParamSet,
    arch: &ArchConfig,
    graphs: &[Graph],
    batch_size: usize,
    use_selector: bool,
    sequential: bool,
) -> Result<EvalPass> {
    if graphs.is_empty() {
        return Err(Error::contract("evaluation over an empty split"));
    }
    if batch_size == 0 {
        return Err(Error::contract("batch_size must be at least 1"));
    }
    let num_batches = graphs.len().div_ceil(batch_size);
    let run_batch = |bi: usize| -> Result<BatchOut> {
        let lo = bi * batch_size;
        let hi = (lo + batch_size).min(graphs.len());
        let refs: Vec<&Graph> = graphs[lo..hi].iter().collect();
        let batch = batch_graphs(&refs)?;
        let mut tape = Tape::new();
        let binding = bind_params_frozen(&mut tape, set)?;
        let (weights, scores) = if use_selector {
            let sel_spec = GnnSpec {
                set,
                binding: &binding,
                prefix: "sel.gnn",
                kind: arch.selector_kind,
                layers: arch.selector_layers,
            };
            let w = edge_logits(&mut tape, &batch, &sel_spec)?;
            let p = tape.sigmoid(w)?;
            (p, Some(tape.value(p).to_vec()))
        } else {
            (unit_edge_weights(&mut tape, &batch)?, None)
        };
        let enc_spec = GnnSpec {
            set,
            binding: &binding,
            prefix: "enc",
            kind: arch.encoder_kind,
            layers: arch.encoder_layers,
        };
        let h = encode(&mut tape, &batch, weights, &enc_spec)?;
        let pooled = readout_sum(&mut tape, h, &batch)?;
        let logits = predict_logits(&mut tape, pooled, set, &binding)?;
        Ok(BatchOut {
            logits: tape.value(logits).to_vec(),
            scores,
            edge_counts: (0..batch.num_graphs)
                .map(|g| batch.graph_edge_count(g))
                .collect(),
        })
    };

    let outs: Vec<Result<BatchOut>> = if sequential {
        par::map_indexed_seq(num_batches, run_batch)
    } else {
        par::map_indexed(num_batches, run_batch)
    };

    let c = arch.num_classes;
    let mut logits = Vec::with_capacity(graphs.len() * c);
    let mut edge_scores = use_selector.then(Vec::new);
    let mut edge_ranges = Vec::with_capacity(graphs.len());
    let mut offset = 0usize;
    for out in outs {
        let out = out?;
        logits.extend_from_slice(&out.logits);
        if let (Some(all), Some(batch_scores)) = (edge_scores.as_mut(), out.scores) {
            all.extend_from_slice(&batch_scores);
        }
        for m in out.edge_counts {
            edge_ranges.push((offset, offset + m));
            offset += m;
        }
    }

    let labels: Vec<usize> = graphs.iter().map(|g| g.label).collect();
    let predictions: Vec<usize> = (0..graphs.len())
        .map(|i| argmax(&logits[i * c..(i + 1) * c]))
        .collect();
    let correct: Vec<bool> = predictions
        .iter()
        .zip(&labels)
        .map(|(p, y)| p == y)
        .collect();

    let all_truth = graphs.iter().all(|g| g.edge_truth.is_some());
    let edge_truth = all_truth.then(|| {
        graphs
            .iter()
            .flat_map(|g| g.edge_truth.as_ref().unwrap().iter().copied())
            .collect::<Vec<bool>>()
    });
    let have_scores = edge_scores.is_some();

    Ok(EvalPass {
        logits,
        labels,
        predictions,
        correct,
        edge_scores,
        edge_truth,
        edge_ranges: have_scores.then_some(edge_ranges),
    })
}
