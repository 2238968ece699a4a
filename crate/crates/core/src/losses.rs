//! The training objective: cross-entropy plus the two selector regularizers.
//!
//! The size term drives each graph's mean sampled edge weight toward the
//! budget `eta`; the alignment term pulls the normalized probabilities of
//! the lowest-K% edges toward a small target `epsilon`, by default the
//! per-graph uniform value `1/m`. The total is
//! `L = L_ce + lambda1 * L_size + lambda2 * L_align`.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, TensorId};
use crate::error::{Error, Result};
use crate::graph::Batch;

/// Alignment target for the bottom-K% edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EpsilonMode {
    /// `epsilon = 1/m` per graph, the uniform fixed point.
    PerGraphUniform,
    /// A fixed constant for every graph.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Edge budget in (0, 1].
    pub eta: f64,
    /// Share of edges entering the alignment term, in (0, 100].
    pub k_percent: f64,
    pub epsilon_mode: EpsilonMode,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda1: 10.0,
            lambda2: 0.01,
            eta: 0.75,
            k_percent: 70.0,
            epsilon_mode: EpsilonMode::PerGraphUniform,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::contract("lambda weights must be non-negative"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::contract(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.k_percent > 0.0 && self.k_percent <= 100.0) {
            return Err(Error::contract(format!(
                "k_percent must lie in (0, 100], got {}",
                self.k_percent
            )));
        }
        if let EpsilonMode::Fixed(e) = self.epsilon_mode {
            if !(e >= 0.0 && e <= 1.0) {
                return Err(Error::contract(format!("fixed epsilon out of [0, 1]: {e}")));
            }
        }
        Ok(())
    }
}

/// Mean cross-entropy of `logits` (`[g, C]`) against class indices.
pub fn loss_erm(tape: &mut Tape, logits: TensorId, labels: &[usize]) -> Result<TensorId> {
    let shape = tape.shape(logits).to_vec();
    let (g, c) = match shape[..] {
        [g, c] => (g, c),
        _ => return Err(Error::contract("logits must be 2-dimensional")),
    };
    if labels.len() != g {
        return Err(Error::contract(format!(
            "{} labels for {} logit rows",
            labels.len(),
            g
        )));
    }
    if g == 0 {
        return Err(Error::contract("cross-entropy of an empty batch"));
    }
    let mut mask = vec![0.0; g * c];
    for (i, &y) in labels.iter().enumerate() {
        if y >= c {
            return Err(Error::contract(format!("label {y} out of range for {c} classes")));
        }
        mask[i * c + y] = 1.0;
    }
    let ls = tape.log_softmax_rows(logits)?;
    let mask = tape.constant(mask, vec![g, c])?;
    let picked = tape.mul(ls, mask)?;
    let total = tape.sum_all(picked)?;
    tape.scalar_mul(total, -1.0 / g as f64)
}

/// Mean over graphs of `(sum(a_tilde)/m - eta)^2`. Differentiates through
/// the straight-through path of `a_tilde`.
pub fn loss_size(tape: &mut Tape, a_tilde: TensorId, batch: &Batch, eta: f64) -> Result<TensorId> {
    for g in 0..batch.num_graphs {
        if batch.graph_edge_count(g) == 0 {
            return Err(Error::contract(format!("graph {g} has no edges for the size term")));
        }
    }
    let sums = tape.scatter_add_rows(a_tilde, batch.edge_to_graph.clone(), batch.num_graphs)?;
    let inv_m: Vec<f64> = (0..batch.num_graphs)
        .map(|g| 1.0 / batch.graph_edge_count(g) as f64)
        .collect();
    let inv_m = tape.constant(inv_m, vec![batch.num_graphs, 1])?;
    let means = tape.mul(sums, inv_m)?;
    let eta_t = tape.constant(vec![eta; batch.num_graphs], vec![batch.num_graphs, 1])?;
    let dev = tape.sub(means, eta_t)?;
    let sq = tape.square(dev)?;
    tape.mean_all(sq)
}

/// Per-graph epsilon targets for the alignment term.
pub fn epsilon_targets(batch: &Batch, mode: EpsilonMode) -> Vec<f64> {
    (0..batch.num_graphs)
        .map(|g| match mode {
            EpsilonMode::PerGraphUniform => 1.0 / batch.graph_edge_count(g) as f64,
            EpsilonMode::Fixed(e) => e,
        })
        .collect()
}

/// Mean over graphs of the mean absolute gap between the selected edges'
/// normalized probabilities and epsilon. `selected` holds batch edge indices
/// per graph, as produced by `bottom_k_edges`.
pub fn loss_align(
    tape: &mut Tape,
    p_hat: TensorId,
    selected: &[Vec<usize>],
    batch: &Batch,
    mode: EpsilonMode,
) -> Result<TensorId> {
    if selected.len() != batch.num_graphs {
        return Err(Error::contract("selection list does not match batch"));
    }
    let m = batch.num_edges();
    let eps = epsilon_targets(batch, mode);
    let mut eps_per_edge = vec![0.0; m];
    let mut weight = vec![0.0; m];
    for (g, sel) in selected.iter().enumerate() {
        if sel.is_empty() {
            return Err(Error::contract(format!("empty bottom-K selection for graph {g}")));
        }
        let w = 1.0 / (sel.len() as f64 * batch.num_graphs as f64);
        for &e in sel {
            eps_per_edge[e] = eps[g];
            weight[e] = w;
        }
    }
    let eps_t = tape.constant(eps_per_edge, vec![m, 1])?;
    let diff = tape.sub(p_hat, eps_t)?;
    let gap = tape.abs(diff)?;
    let weight = tape.constant(weight, vec![m, 1])?;
    let weighted = tape.mul(gap, weight)?;
    tape.sum_all(weighted)
}

/// `L = erm + lambda1 * size + lambda2 * align`.
pub fn loss_total(
    tape: &mut Tape,
    erm: TensorId,
    size: TensorId,
    align: TensorId,
    weights: &LossWeights,
) -> Result<TensorId> {
    let l1 = tape.scalar_mul(size, weights.lambda1)?;
    let l2 = tape.scalar_mul(align, weights.lambda2)?;
    let partial = tape.add(erm, l1)?;
    tape.add(partial, l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{batch_graphs, Graph};

    fn chain(n: usize) -> Graph {
        Graph {
            num_nodes: n,
            feature_dim: 1,
            features: vec![1.0; n],
            edges: (0..n - 1).map(|i| (i, i + 1)).collect(),
            label: 0,
            edge_truth: None,
            env_id: 0,
        }
    }

    #[test]
    fn uniform_logits_give_log_of_class_count() {
        let mut tape = Tape::new();
        let logits = tape.constant(vec![0.2; 6], vec![2, 3]).unwrap();
        let l = loss_erm(&mut tape, logits, &[0, 2]).unwrap();
        assert!((tape.value(l)[0] - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logits_give_near_zero_loss() {
        let mut tape = Tape::new();
        let logits = tape
            .constant(vec![50.0, 0.0, 0.0, 0.0, 50.0, 0.0], vec![2, 3])
            .unwrap();
        let l = loss_erm(&mut tape, logits, &[0, 1]).unwrap();
        assert!(tape.value(l)[0] < 1e-12);
    }

    #[test]
    fn hand_computed_two_graph_cross_entropy() {
        let mut tape = Tape::new();
        let logits = tape.constant(vec![1.0, 0.0, 0.0, 2.0], vec![2, 2]).unwrap();
        let l = loss_erm(&mut tape, logits, &[0, 0]).unwrap();
        let expect = 0.5
            * (-(1.0f64.exp() / (1.0f64.exp() + 1.0)).ln()
                - (1.0 / (1.0 + 2.0f64.exp())).ln());
        assert!((tape.value(l)[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn label_out_of_range_rejected() {
        let mut tape = Tape::new();
        let logits = tape.constant(vec![0.0; 4], vec![2, 2]).unwrap();
        assert!(loss_erm(&mut tape, logits, &[0, 2]).is_err());
    }

    #[test]
    fn size_loss_identities() {
        let g = chain(5);
        let batch = batch_graphs(&[&g]).unwrap();
        let mut tape = Tape::new();

        // weights exactly at the budget
        let at = tape.constant(vec![0.75; 4], vec![4, 1]).unwrap();
        let l = loss_size(&mut tape, at, &batch, 0.75).unwrap();
        assert_eq!(tape.value(l)[0], 0.0);

        // all ones against eta = 0.75
        let ones = tape.constant(vec![1.0; 4], vec![4, 1]).unwrap();
        let l = loss_size(&mut tape, ones, &batch, 0.75).unwrap();
        assert!((tape.value(l)[0] - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn size_loss_averages_over_graphs() {
        // means 0.5 and 1.0 against eta = 0.75 average to 0.0625
        let (a, b) = (chain(3), chain(3));
        let batch = batch_graphs(&[&a, &b]).unwrap();
        let mut tape = Tape::new();
        let w = tape
            .constant(vec![0.5, 0.5, 1.0, 1.0], vec![4, 1])
            .unwrap();
        let l = loss_size(&mut tape, w, &batch, 0.75).unwrap();
        assert!((tape.value(l)[0] - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn align_loss_zero_at_uniform_fixed_point() {
        let g = chain(5);
        let batch = batch_graphs(&[&g]).unwrap();
        let mut tape = Tape::new();
        let p_hat = tape.constant(vec![0.25; 4], vec![4, 1]).unwrap();
        let sel = vec![vec![0, 1, 2]];
        let l = loss_align(&mut tape, p_hat, &sel, &batch, EpsilonMode::PerGraphUniform).unwrap();
        assert_eq!(tape.value(l)[0], 0.0);
    }

    #[test]
    fn align_loss_hand_case() {
        // m=4, p_hat [0.4, 0.3, 0.2, 0.1], lowest two selected, eps 0.25
        let g = chain(5);
        let batch = batch_graphs(&[&g]).unwrap();
        let mut tape = Tape::new();
        let p_hat = tape
            .constant(vec![0.4, 0.3, 0.2, 0.1], vec![4, 1])
            .unwrap();
        let sel = vec![vec![2, 3]];
        let l = loss_align(&mut tape, p_hat, &sel, &batch, EpsilonMode::PerGraphUniform).unwrap();
        assert!((tape.value(l)[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn align_loss_fixed_epsilon_collapses_absolute_values() {
        // all p_hat below 0.5: loss is 0.5 minus the selected mean
        let g = chain(5);
        let batch = batch_graphs(&[&g]).unwrap();
        let mut tape = Tape::new();
        let vals = vec![0.4, 0.3, 0.2, 0.1];
        let p_hat = tape.constant(vals.clone(), vec![4, 1]).unwrap();
        let sel = vec![vec![0, 1, 2, 3]];
        let l = loss_align(&mut tape, p_hat, &sel, &batch, EpsilonMode::Fixed(0.5)).unwrap();
        let mean = vals.iter().sum::<f64>() / 4.0;
        assert!((tape.value(l)[0] - (0.5 - mean)).abs() < 1e-15);
    }

    #[test]
    fn align_subgradient_zero_at_epsilon() {
        let g = chain(5);
        let batch = batch_graphs(&[&g]).unwrap();
        let mut tape = Tape::new();
        let p_hat = tape
            .leaf(vec![0.25, 0.3, 0.2, 0.25], vec![4, 1], true)
            .unwrap();
        let sel = vec![vec![0, 1, 2, 3]];
        let l = loss_align(&mut tape, p_hat, &sel, &batch, EpsilonMode::PerGraphUniform).unwrap();
        tape.backward(l).unwrap();
        let grad = tape.grad(p_hat).unwrap();
        assert_eq!(grad[0], 0.0);
        assert_eq!(grad[3], 0.0);
        assert!(grad[1] > 0.0);
        assert!(grad[2] < 0.0);
    }

    #[test]
    fn total_is_weighted_sum() {
        let mut tape = Tape::new();
        let erm = tape.constant(vec![1.0], vec![1]).unwrap();
        let size = tape.constant(vec![0.04], vec![1]).unwrap();
        let align = tape.constant(vec![0.1], vec![1]).unwrap();
        let w = LossWeights {
            lambda1: 10.0,
            lambda2: 0.01,
            ..LossWeights::default()
        };
        let l = loss_total(&mut tape, erm, size, align, &w).unwrap();
        assert!((tape.value(l)[0] - 1.401).abs() < 1e-12);

        // lambda1 = lambda2 = 0 reduces to the cross-entropy alone
        let w0 = LossWeights { lambda1: 0.0, lambda2: 0.0, ..w };
        let l0 = loss_total(&mut tape, erm, size, align, &w0).unwrap();
        assert_eq!(tape.value(l0)[0], 1.0);
    }

    #[test]
    fn total_is_linear_in_lambdas() {
        let mut tape = Tape::new();
        let erm = tape.constant(vec![0.7], vec![1]).unwrap();
        let size = tape.constant(vec![0.2], vec![1]).unwrap();
        let align = tape.constant(vec![0.05], vec![1]).unwrap();
        let base = LossWeights { lambda1: 20.0, lambda2: 0.01, ..LossWeights::default() };
        let doubled = LossWeights { lambda1: 40.0, ..base };
        let l_base = loss_total(&mut tape, erm, size, align, &base).unwrap();
        let l_doubled = loss_total(&mut tape, erm, size, align, &doubled).unwrap();
        let contrib_base = tape.value(l_base)[0] - 0.7 - 0.01 * 0.05;
        let contrib_doubled = tape.value(l_doubled)[0] - 0.7 - 0.01 * 0.05;
        assert!((contrib_doubled - 2.0 * contrib_base).abs() < 1e-12);
    }

    #[test]
    fn size_loss_gradient_step_moves_mean_toward_budget() {
        // one graph, weights parameterized through sigmoid; a single descent
        // step must shrink |mean - eta|
        let g = chain(4);
        let batch = batch_graphs(&[&g]).unwrap();
        let mut theta = vec![0.9, -0.3, 0.4];
        let eta = 0.5;
        let mean_of = |theta: &[f64]| -> f64 {
            theta
                .iter()
                .map(|&t| 1.0 / (1.0 + (-t as f64).exp()))
                .sum::<f64>()
                / 3.0
        };
        let before = (mean_of(&theta) - eta).abs();

        let mut tape = Tape::new();
        let t = tape.leaf(theta.clone(), vec![3, 1], true).unwrap();
        let p = tape.sigmoid(t).unwrap();
        let l = loss_size(&mut tape, p, &batch, eta).unwrap();
        tape.backward(l).unwrap();
        let grad = tape.grad(t).unwrap().to_vec();
        for (th, g) in theta.iter_mut().zip(&grad) {
            *th -= 0.5 * g;
        }
        let after = (mean_of(&theta) - eta).abs();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn weight_validation() {
        assert!(LossWeights::default().validate().is_ok());
        assert!(LossWeights { eta: 0.0, ..LossWeights::default() }.validate().is_err());
        assert!(LossWeights { lambda1: -1.0, ..LossWeights::default() }.validate().is_err());
        assert!(LossWeights { k_percent: 0.0, ..LossWeights::default() }.validate().is_err());
        assert!(LossWeights { epsilon_mode: EpsilonMode::Fixed(1.5), ..LossWeights::default() }
            .validate()
            .is_err());
    }
}
