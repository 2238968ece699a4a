//! Run configuration: a single key = value namespace shared by every
//! command, loadable from a config file with command-line flags taking
//! precedence. Unknown keys are rejected, and each run writes its fully
//! resolved configuration next to its outputs.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pruneood_core::losses::{EpsilonMode, LossWeights};
use pruneood_core::model::GnnKind;
use pruneood_core::synth::{ShiftConfig, SplitKind};
use pruneood_core::trainer::{EvalMetric, MetricOptions, TrainConfig};

#[derive(Clone, Debug)]
pub struct RunConfig {
    // data generation
    pub split: SplitKind,
    pub bias: f64,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub base_size_train: (usize, usize),
    pub base_size_val: (usize, usize),
    pub base_size_test: (usize, usize),
    pub seed: u64,
    // training
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    pub k_percent: f64,
    pub epsilon_mode: String,
    pub epsilon_value: f64,
    pub encoder: GnnKind,
    pub encoder_layers: usize,
    pub hidden: usize,
    pub selector: GnnKind,
    pub selector_layers: usize,
    pub selector_hidden: usize,
    pub early_stop_patience: usize,
    pub eval_metric: EvalMetric,
    pub label: String,
    // metrics
    pub k_multipliers: Vec<f64>,
    pub k_percents: Vec<f64>,
    // hyperparameter grid
    pub grid_eta: Vec<f64>,
    pub grid_lambda1: Vec<f64>,
    pub grid_lambda2: Vec<f64>,
    pub grid_k_percent: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let w = LossWeights::default();
        RunConfig {
            split: SplitKind::BaseCovariate,
            bias: 1.0 / 3.0,
            train_size: 1500,
            val_size: 500,
            test_size: 500,
            base_size_train: (8, 14),
            base_size_val: (8, 14),
            base_size_test: (8, 14),
            seed: 0,
            epochs: t.epochs,
            pretrain_epochs: t.pretrain_epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            tau: t.tau,
            lambda1: w.lambda1,
            lambda2: w.lambda2,
            eta: w.eta,
            k_percent: w.k_percent,
            epsilon_mode: "uniform".into(),
            epsilon_value: 0.5,
            encoder: GnnKind::Gin,
            encoder_layers: t.encoder_layers,
            hidden: t.hidden,
            selector: GnnKind::Gin,
            selector_layers: t.selector_layers,
            selector_hidden: t.selector_hidden,
            early_stop_patience: t.early_stop_patience,
            eval_metric: EvalMetric::Accuracy,
            label: "auto".into(),
            k_multipliers: vec![5.0, 3.0, 1.5],
            k_percents: vec![10.0, 20.0, 30.0, 40.0, 50.0],
            grid_eta: vec![0.5, 0.75, 0.85],
            grid_lambda1: vec![10.0, 40.0],
            grid_lambda2: vec![0.1, 0.01, 0.001],
            grid_k_percent: vec![50.0, 70.0, 90.0],
        }
    }
}

fn parse_pair(v: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("expected MIN,MAX, got {v:?}");
    }
    Ok((parts[0].parse()?, parts[1].parse()?))
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| anyhow!("bad number {s:?}: {e}")))
        .collect()
}

fn parse_gnn(v: &str) -> Result<GnnKind> {
    match v {
        "gin" => Ok(GnnKind::Gin),
        "gcn" => Ok(GnnKind::Gcn),
        other => bail!("expected gin or gcn, got {other:?}"),
    }
}

fn gnn_str(k: GnnKind) -> &'static str {
    match k {
        GnnKind::Gin => "gin",
        GnnKind::Gcn => "gcn",
    }
}

impl RunConfig {
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "split" => {
                self.split = match v {
                    "base" => SplitKind::BaseCovariate,
                    "size" => SplitKind::SizeCovariate,
                    "concept" => SplitKind::Concept,
                    other => bail!("split must be base, size or concept, got {other:?}"),
                }
            }
            "bias" => self.bias = v.parse()?,
            "train_size" => self.train_size = v.parse()?,
            "val_size" => self.val_size = v.parse()?,
            "test_size" => self.test_size = v.parse()?,
            "base_size_train" => self.base_size_train = parse_pair(v)?,
            "base_size_val" => self.base_size_val = parse_pair(v)?,
            "base_size_test" => self.base_size_test = parse_pair(v)?,
            "seed" => self.seed = v.parse()?,
            "epochs" => self.epochs = v.parse()?,
            "pretrain_epochs" => self.pretrain_epochs = v.parse()?,
            "learning_rate" => self.learning_rate = v.parse()?,
            "batch_size" => self.batch_size = v.parse()?,
            "tau" => self.tau = v.parse()?,
            "lambda1" => self.lambda1 = v.parse()?,
            "lambda2" => self.lambda2 = v.parse()?,
            "eta" => self.eta = v.parse()?,
            "k_percent" => self.k_percent = v.parse()?,
            "epsilon_mode" => match v {
                "uniform" | "fixed" => self.epsilon_mode = v.into(),
                other => bail!("epsilon_mode must be uniform or fixed, got {other:?}"),
            },
            "epsilon_value" => self.epsilon_value = v.parse()?,
            "encoder" => self.encoder = parse_gnn(v)?,
            "encoder_layers" => self.encoder_layers = v.parse()?,
            "hidden" => self.hidden = v.parse()?,
            "selector" => self.selector = parse_gnn(v)?,
            "selector_layers" => self.selector_layers = v.parse()?,
            "selector_hidden" => self.selector_hidden = v.parse()?,
            "early_stop_patience" => self.early_stop_patience = v.parse()?,
            "eval_metric" => {
                self.eval_metric = match v {
                    "accuracy" => EvalMetric::Accuracy,
                    "roc_auc" => EvalMetric::RocAuc,
                    other => bail!("eval_metric must be accuracy or roc_auc, got {other:?}"),
                }
            }
            "label" => self.label = v.into(),
            "k_multipliers" => self.k_multipliers = parse_list(v)?,
            "k_percents" => self.k_percents = parse_list(v)?,
            "grid_eta" => self.grid_eta = parse_list(v)?,
            "grid_lambda1" => self.grid_lambda1 = parse_list(v)?,
            "grid_lambda2" => self.grid_lambda2 = parse_list(v)?,
            "grid_k_percent" => self.grid_k_percent = parse_list(v)?,
            other => bail!("unknown configuration key {other:?}"),
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            self.apply_kv(key.trim(), value.trim())
                .with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(())
    }

    /// Effective run label: pure cross-entropy configurations are tagged
    /// `erm-ablation` unless an explicit label was given.
    pub fn effective_label(&self) -> String {
        if self.label != "auto" {
            return self.label.clone();
        }
        if self.lambda1 == 0.0 && self.lambda2 == 0.0 {
            "erm-ablation".into()
        } else {
            "prune".into()
        }
    }

    pub fn epsilon(&self) -> EpsilonMode {
        if self.epsilon_mode == "fixed" {
            EpsilonMode::Fixed(self.epsilon_value)
        } else {
            EpsilonMode::PerGraphUniform
        }
    }

    pub fn shift_config(&self) -> ShiftConfig {
        ShiftConfig {
            split_kind: self.split,
            bias: self.bias,
            train_size: self.train_size,
            val_size: self.val_size,
            test_size: self.test_size,
            base_size_ranges: [self.base_size_train, self.base_size_val, self.base_size_test],
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            pretrain_epochs: self.pretrain_epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            weights: LossWeights {
                lambda1: self.lambda1,
                lambda2: self.lambda2,
                eta: self.eta,
                k_percent: self.k_percent,
                epsilon_mode: self.epsilon(),
            },
            tau: self.tau,
            encoder_kind: self.encoder,
            encoder_layers: self.encoder_layers,
            hidden: self.hidden,
            selector_kind: self.selector,
            selector_layers: self.selector_layers,
            selector_hidden: self.selector_hidden,
            seed: self.seed,
            early_stop_patience: self.early_stop_patience,
            eval_metric: self.eval_metric,
        }
    }

    pub fn metric_options(&self) -> MetricOptions {
        MetricOptions {
            k_multipliers: self.k_multipliers.clone(),
            k_percents: self.k_percents.clone(),
            batch_size: self.batch_size,
        }
    }

    /// Full key = value dump in a fixed order.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let split = match self.split {
            SplitKind::BaseCovariate => "base",
            SplitKind::SizeCovariate => "size",
            SplitKind::Concept => "concept",
        };
        let _ = writeln!(s, "split = {split}");
        let _ = writeln!(s, "bias = {}", self.bias);
        let _ = writeln!(s, "train_size = {}", self.train_size);
        let _ = writeln!(s, "val_size = {}", self.val_size);
        let _ = writeln!(s, "test_size = {}", self.test_size);
        let _ = writeln!(s, "base_size_train = {},{}", self.base_size_train.0, self.base_size_train.1);
        let _ = writeln!(s, "base_size_val = {},{}", self.base_size_val.0, self.base_size_val.1);
        let _ = writeln!(s, "base_size_test = {},{}", self.base_size_test.0, self.base_size_test.1);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "pretrain_epochs = {}", self.pretrain_epochs);
        let _ = writeln!(s, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "tau = {}", self.tau);
        let _ = writeln!(s, "lambda1 = {}", self.lambda1);
        let _ = writeln!(s, "lambda2 = {}", self.lambda2);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "k_percent = {}", self.k_percent);
        let _ = writeln!(s, "epsilon_mode = {}", self.epsilon_mode);
        let _ = writeln!(s, "epsilon_value = {}", self.epsilon_value);
        let _ = writeln!(s, "encoder = {}", gnn_str(self.encoder));
        let _ = writeln!(s, "encoder_layers = {}", self.encoder_layers);
        let _ = writeln!(s, "hidden = {}", self.hidden);
        let _ = writeln!(s, "selector = {}", gnn_str(self.selector));
        let _ = writeln!(s, "selector_layers = {}", self.selector_layers);
        let _ = writeln!(s, "selector_hidden = {}", self.selector_hidden);
        let _ = writeln!(s, "early_stop_patience = {}", self.early_stop_patience);
        let metric = match self.eval_metric {
            EvalMetric::Accuracy => "accuracy",
            EvalMetric::RocAuc => "roc_auc",
        };
        let _ = writeln!(s, "eval_metric = {metric}");
        let _ = writeln!(s, "label = {}", self.effective_label());
        let _ = writeln!(s, "k_multipliers = {}", list(&self.k_multipliers));
        let _ = writeln!(s, "k_percents = {}", list(&self.k_percents));
        let _ = writeln!(s, "grid_eta = {}", list(&self.grid_eta));
        let _ = writeln!(s, "grid_lambda1 = {}", list(&self.grid_lambda1));
        let _ = writeln!(s, "grid_lambda2 = {}", list(&self.grid_lambda2));
        let _ = writeln!(s, "grid_k_percent = {}", list(&self.grid_k_percent));
        s
    }
}
