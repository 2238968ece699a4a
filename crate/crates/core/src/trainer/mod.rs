//! End-to-end training: cross-entropy pretraining with the intact graph,
//! then joint optimization of encoder, classifier and selector under the
//! full objective, with per-epoch validation, best-checkpoint tracking and
//! early stopping.
//!
//! During pretraining the selector is untouched and edge weights are all
//! ones. From `pretrain_epochs` onward each minibatch computes edge logits,
//! samples straight-through weights, adds the size and alignment penalties
//! and backpropagates through everything with one Adam instance. Validation
//! always runs in deterministic eval mode. Checkpoint selection and the
//! early-stopping counter start once the selector joins the objective, so
//! warmup epochs are not candidate models; for pure cross-entropy runs
//! (`pretrain_epochs >= epochs`) they start at epoch zero.

pub mod adam;
pub mod checkpoint;
mod eval;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};

use crate::encoder::{encode, predict_logits, readout_sum, unit_edge_weights, GnnSpec};
use crate::error::{Error, Result};
use crate::graph::{batch_graphs, Graph};
use crate::losses::{loss_align, loss_erm, loss_size, loss_total, LossWeights};
use crate::metrics::{
    accuracy, edge_auc, gc_rank_stats, recall_precision_at_k, roc_auc, topk_edge_counts,
    MetricReport,
};
use crate::model::{bind_params, collect_grads, init_params, ArchConfig, GnnKind};
use crate::rng::stream_rng;
use crate::selector::{bottom_k_edges, selector_forward, SampleMode};
use crate::synth::DatasetBundle;
use crate::autodiff::Tape;

use eval::{forward_eval, EvalPass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMetric {
    Accuracy,
    RocAuc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Leading epochs trained with cross-entropy only, selector untouched.
    pub pretrain_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weights: LossWeights,
    /// Gumbel-Softmax temperature.
    pub tau: f64,
    pub encoder_kind: GnnKind,
    pub encoder_layers: usize,
    pub hidden: usize,
    pub selector_kind: GnnKind,
    pub selector_layers: usize,
    pub selector_hidden: usize,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    pub eval_metric: EvalMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            pretrain_epochs: 10,
            learning_rate: 1e-3,
            batch_size: 64,
            weights: LossWeights::default(),
            tau: 1.0,
            encoder_kind: GnnKind::Gin,
            encoder_layers: 3,
            hidden: 64,
            selector_kind: GnnKind::Gin,
            selector_layers: 2,
            selector_hidden: 32,
            seed: 0,
            early_stop_patience: 10,
            eval_metric: EvalMetric::Accuracy,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::contract("epochs must be at least 1"));
        }
        if self.pretrain_epochs > self.epochs {
            return Err(Error::contract(format!(
                "pretrain_epochs {} exceeds epochs {}",
                self.pretrain_epochs, self.epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::contract("batch_size must be at least 1"));
        }
        if self.tau <= 0.0 {
            return Err(Error::contract("tau must be positive"));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::contract("learning_rate must be positive"));
        }
        self.weights.validate()
    }

    pub fn uses_selector(&self) -> bool {
        self.pretrain_epochs < self.epochs
    }
}

/// One row of the training log CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_l_e: Option<f64>,
    pub train_l_s: Option<f64>,
    pub val_metric: f64,
    pub mean_gc_prob: Option<f64>,
    pub mean_gc_rank: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
}

pub const TRAINLOG_HEADER: &str =
    "epoch,train_loss,train_L_e,train_L_s,val_metric,mean_gc_prob,mean_gc_rank";

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAINLOG_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&Self::row_csv(r));
        }
        out
    }

    pub fn row_csv(r: &TrainLogRow) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}\n",
            r.epoch,
            r.train_loss,
            opt(r.train_l_e),
            opt(r.train_l_s),
            r.val_metric,
            opt(r.mean_gc_prob),
            opt(r.mean_gc_rank)
        )
    }
}

/// Per-epoch view handed to the training callback.
pub struct EpochEvent<'a> {
    pub row: &'a TrainLogRow,
    pub checkpoint: &'a Checkpoint,
    pub is_best: bool,
}

/// Metric selection knobs for `evaluate`.
#[derive(Clone, Debug)]
pub struct MetricOptions {
    pub k_multipliers: Vec<f64>,
    pub k_percents: Vec<f64>,
    pub batch_size: usize,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            k_multipliers: vec![5.0, 3.0, 1.5],
            k_percents: vec![10.0, 20.0, 30.0, 40.0, 50.0],
            batch_size: 64,
        }
    }
}

fn infer_dims(bundle: &DatasetBundle) -> Result<(usize, usize)> {
    let first = bundle
        .train
        .first()
        .ok_or_else(|| Error::contract("empty training split"))?;
    let d = first.feature_dim;
    let mut c = 2;
    for split in bundle.splits() {
        if split.is_empty() {
            return Err(Error::contract("every split must be non-empty"));
        }
        for g in split {
            if g.feature_dim != d {
                return Err(Error::contract("feature dimension differs across graphs"));
            }
            c = c.max(g.label + 1);
        }
    }
    for split in bundle.splits() {
        for g in split {
            g.validate_with_classes(c)?;
        }
    }
    Ok((d, c))
}

fn primary_metric(pass: &EvalPass, metric: EvalMetric, num_classes: usize) -> Result<f64> {
    match metric {
        EvalMetric::Accuracy => accuracy(&pass.logits, num_classes, &pass.labels),
        EvalMetric::RocAuc => {
            if num_classes != 2 {
                return Err(Error::UndefinedMetric(
                    "ROC-AUC validation needs a binary task".into(),
                ));
            }
            let scores: Vec<f64> = (0..pass.labels.len())
                .map(|i| pass.logits[i * 2 + 1] - pass.logits[i * 2])
                .collect();
            let labels: Vec<bool> = pass.labels.iter().map(|&y| y == 1).collect();
            roc_auc(&scores, &labels)
        }
    }
}

/// Train on the bundle and return the best-validation checkpoint with the
/// per-epoch log.
pub fn train(bundle: &DatasetBundle, cfg: &TrainConfig) -> Result<(Checkpoint, TrainLog)> {
    train_with_callback(bundle, cfg, |_| Ok(()))
}

pub fn train_with_callback(
    bundle: &DatasetBundle,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochEvent) -> Result<()>,
) -> Result<(Checkpoint, TrainLog)> {
    cfg.validate()?;
    let (feature_dim, num_classes) = infer_dims(bundle)?;
    if cfg.eval_metric == EvalMetric::RocAuc && num_classes != 2 {
        return Err(Error::UndefinedMetric(
            "ROC-AUC validation needs a binary task".into(),
        ));
    }
    let arch = ArchConfig {
        feature_dim,
        num_classes,
        encoder_kind: cfg.encoder_kind,
        encoder_layers: cfg.encoder_layers,
        hidden: cfg.hidden,
        selector_kind: cfg.selector_kind,
        selector_layers: cfg.selector_layers,
        selector_hidden: cfg.selector_hidden,
    };
    let mut set = init_params(&arch, &mut stream_rng(cfg.seed, "init", &[]))?;
    let mut adam = AdamState::new(&set);
    let uses_selector = cfg.uses_selector();
    // warmup epochs are not candidate models unless the run is pure ERM
    let selection_start = if uses_selector { cfg.pretrain_epochs } else { 0 };

    let mut log = TrainLog::default();
    let mut best: Option<Checkpoint> = None;
    let mut epochs_since_improvement = 0usize;

    for epoch in 0..cfg.epochs {
        let main_phase = epoch >= cfg.pretrain_epochs;
        let mut order: Vec<usize> = (0..bundle.train.len()).collect();
        order.shuffle(&mut stream_rng(cfg.seed, "shuffle", &[epoch as u64]));

        let mut loss_sum = 0.0;
        let mut le_sum = 0.0;
        let mut ls_sum = 0.0;
        let mut batches = 0usize;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<&Graph> = chunk.iter().map(|&i| &bundle.train[i]).collect();
            let batch = batch_graphs(&refs)?;
            let mut tape = Tape::new();
            let grads = {
                let binding =
                    bind_params(&mut tape, &set, |n| main_phase || !n.starts_with("sel."))?;
                let enc_spec = GnnSpec {
                    set: &set,
                    binding: &binding,
                    prefix: "enc",
                    kind: cfg.encoder_kind,
                    layers: cfg.encoder_layers,
                };
                let total = if main_phase {
                    let sel_spec = GnnSpec {
                        set: &set,
                        binding: &binding,
                        prefix: "sel.gnn",
                        kind: cfg.selector_kind,
                        layers: cfg.selector_layers,
                    };
                    let mut gumbel =
                        stream_rng(cfg.seed, "gumbel", &[epoch as u64, bi as u64]);
                    let sel = selector_forward(
                        &mut tape,
                        &batch,
                        &sel_spec,
                        cfg.tau,
                        SampleMode::Train,
                        &mut gumbel,
                    )?;
                    let w_vals = tape.value(sel.w).to_vec();
                    let selected =
                        bottom_k_edges(&w_vals, &batch.edge_ranges, cfg.weights.k_percent)?;
                    let l_e = loss_size(&mut tape, sel.a_tilde, &batch, cfg.weights.eta)?;
                    let l_s = loss_align(
                        &mut tape,
                        sel.p_hat,
                        &selected,
                        &batch,
                        cfg.weights.epsilon_mode,
                    )?;
                    let h = encode(&mut tape, &batch, sel.a_tilde, &enc_spec)?;
                    let pooled = readout_sum(&mut tape, h, &batch)?;
                    let logits = predict_logits(&mut tape, pooled, &set, &binding)?;
                    let l_gt = loss_erm(&mut tape, logits, &batch.labels)?;
                    le_sum += tape.value(l_e)[0];
                    ls_sum += tape.value(l_s)[0];
                    loss_total(&mut tape, l_gt, l_e, l_s, &cfg.weights)?
                } else {
                    let ones = unit_edge_weights(&mut tape, &batch)?;
                    let h = encode(&mut tape, &batch, ones, &enc_spec)?;
                    let pooled = readout_sum(&mut tape, h, &batch)?;
                    let logits = predict_logits(&mut tape, pooled, &set, &binding)?;
                    loss_erm(&mut tape, logits, &batch.labels)?
                };
                loss_sum += tape.value(total)[0];
                batches += 1;
                tape.backward(total)?;
                collect_grads(&tape, &binding)
            };
            adam_step(&mut set, &grads, &mut adam, cfg.learning_rate)?;
        }

        let pass = forward_eval(
            &set,
            &arch,
            &bundle.val,
            cfg.batch_size,
            uses_selector,
            false,
        )?;
        let val_metric = primary_metric(&pass, cfg.eval_metric, num_classes)?;
        let (gc_prob, gc_rank) = match (&pass.edge_scores, &pass.edge_truth, &pass.edge_ranges) {
            (Some(scores), Some(truth), Some(ranges)) => gc_rank_stats(scores, truth, ranges)
                .map(|(p, r)| (Some(p), Some(r)))
                .unwrap_or((None, None)),
            _ => (None, None),
        };

        let row = TrainLogRow {
            epoch,
            train_loss: loss_sum / batches.max(1) as f64,
            train_l_e: main_phase.then(|| le_sum / batches.max(1) as f64),
            train_l_s: main_phase.then(|| ls_sum / batches.max(1) as f64),
            val_metric,
            mean_gc_prob: gc_prob,
            mean_gc_rank: gc_rank,
        };

        let mut is_best = false;
        let mut stop = false;
        if epoch >= selection_start {
            let improved = best
                .as_ref()
                .map(|b| val_metric > b.val_metric)
                .unwrap_or(true);
            if improved {
                best = Some(Checkpoint {
                    epoch,
                    val_metric,
                    config: cfg.clone(),
                    arch: arch.clone(),
                    params: set.clone(),
                });
                epochs_since_improvement = 0;
                is_best = true;
            } else {
                epochs_since_improvement += 1;
                if cfg.early_stop_patience > 0
                    && epochs_since_improvement >= cfg.early_stop_patience
                {
                    stop = true;
                }
            }
        }

        let current = Checkpoint {
            epoch,
            val_metric,
            config: cfg.clone(),
            arch: arch.clone(),
            params: set.clone(),
        };
        on_epoch(&EpochEvent { row: &row, checkpoint: &current, is_best })?;
        log.rows.push(row);
        if stop {
            break;
        }
    }

    let best = best.ok_or_else(|| Error::contract("training produced no checkpoint"))?;
    Ok((best, log))
}

fn build_report(pass: &EvalPass, num_classes: usize, opts: &MetricOptions) -> Result<MetricReport> {
    let acc = accuracy(&pass.logits, num_classes, &pass.labels)?;
    let auc = if num_classes == 2 {
        let scores: Vec<f64> = (0..pass.labels.len())
            .map(|i| pass.logits[i * 2 + 1] - pass.logits[i * 2])
            .collect();
        let labels: Vec<bool> = pass.labels.iter().map(|&y| y == 1).collect();
        roc_auc(&scores, &labels).ok()
    } else {
        None
    };

    let mut report = MetricReport {
        accuracy: acc,
        roc_auc: auc,
        edge_auc_all: None,
        edge_auc_correct: None,
        topk_counts: Vec::new(),
        recall_at_k: Vec::new(),
        precision_at_k: Vec::new(),
        mean_gc_prob: None,
        mean_gc_rank: None,
        vacuous_recall_graphs: 0,
    };

    if let (Some(scores), Some(truth), Some(ranges)) =
        (&pass.edge_scores, &pass.edge_truth, &pass.edge_ranges)
    {
        let (all, correct) = edge_auc(scores, truth, ranges, &pass.correct)?;
        report.edge_auc_all = all;
        report.edge_auc_correct = correct;
        for &k in &opts.k_multipliers {
            let (inv, spu) = topk_edge_counts(scores, truth, ranges, k)?;
            report.topk_counts.push((k, inv, spu));
        }
        for &k in &opts.k_percents {
            let rp = recall_precision_at_k(scores, truth, ranges, k)?;
            report.recall_at_k.push((k, rp.recall));
            report.precision_at_k.push((k, rp.precision));
            report.vacuous_recall_graphs = report.vacuous_recall_graphs.max(rp.vacuous_graphs);
        }
        if let Ok((p, r)) = gc_rank_stats(scores, truth, ranges) {
            report.mean_gc_prob = Some(p);
            report.mean_gc_rank = Some(r);
        }
    }
    Ok(report)
}

fn check_dims(ckpt: &Checkpoint, graphs: &[Graph]) -> Result<()> {
    if graphs.is_empty() {
        return Err(Error::contract("evaluation over an empty split"));
    }
    for g in graphs {
        if g.feature_dim != ckpt.arch.feature_dim {
            return Err(Error::contract(format!(
                "dimension mismatch: checkpoint expects feature dim {}, dataset has {}",
                ckpt.arch.feature_dim, g.feature_dim
            )));
        }
        if g.label >= ckpt.arch.num_classes {
            return Err(Error::contract(format!(
                "dimension mismatch: label {} outside the checkpoint's {} classes",
                g.label, ckpt.arch.num_classes
            )));
        }
    }
    Ok(())
}

/// Deterministic evaluation of a checkpoint on a dataset.
pub fn evaluate(ckpt: &Checkpoint, graphs: &[Graph], opts: &MetricOptions) -> Result<MetricReport> {
    check_dims(ckpt, graphs)?;
    let pass = forward_eval(
        &ckpt.params,
        &ckpt.arch,
        graphs,
        opts.batch_size,
        ckpt.uses_selector(),
        false,
    )?;
    build_report(&pass, ckpt.arch.num_classes, opts)
}

/// Sequential evaluation path, kept for the benchmark comparison.
pub fn evaluate_sequential(
    ckpt: &Checkpoint,
    graphs: &[Graph],
    opts: &MetricOptions,
) -> Result<MetricReport> {
    check_dims(ckpt, graphs)?;
    let pass = forward_eval(
        &ckpt.params,
        &ckpt.arch,
        graphs,
        opts.batch_size,
        ckpt.uses_selector(),
        true,
    )?;
    build_report(&pass, ckpt.arch.num_classes, opts)
}

/// Raw per-edge selector scores for a dataset, pooled in graph order,
/// together with edge ranges and per-graph correctness. Drives the case
/// study and report commands.
pub struct SelectorScores {
    pub scores: Vec<f64>,
    pub truth: Option<Vec<bool>>,
    pub edge_ranges: Vec<(usize, usize)>,
    pub correct: Vec<bool>,
}

pub fn selector_scores(ckpt: &Checkpoint, graphs: &[Graph], batch_size: usize) -> Result<SelectorScores> {
    check_dims(ckpt, graphs)?;
    let pass = forward_eval(&ckpt.params, &ckpt.arch, graphs, batch_size, true, false)?;
    Ok(SelectorScores {
        scores: pass.edge_scores.expect("selector pass produces scores"),
        truth: pass.edge_truth,
        edge_ranges: pass.edge_ranges.expect("selector pass produces ranges"),
        correct: pass.correct,
    })
}
