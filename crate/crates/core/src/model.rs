//! Named parameter storage shared by the encoder, classifier and selector.
//!
//! Parameters live outside any tape as plain buffers. Each forward pass
//! binds the relevant subset onto a fresh tape as leaves; after backward the
//! gradients are collected back in parameter order for the optimizer.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, TensorId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    params: Vec<Param>,
    by_name: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        let name = name.into();
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "param {name}: shape/data mismatch"
        );
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate param name {name}"
        );
        self.by_name.insert(name.clone(), self.params.len());
        self.params.push(Param { name, shape, data });
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Result<&Param> {
        self.index_of(name)
            .map(|i| &self.params[i])
            .ok_or_else(|| Error::contract(format!("unknown parameter {name}")))
    }
}

/// Which message-passing family a network uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GnnKind {
    Gin,
    Gcn,
}

/// Widths and depths of every trainable component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub feature_dim: usize,
    pub num_classes: usize,
    pub encoder_kind: GnnKind,
    pub encoder_layers: usize,
    pub hidden: usize,
    pub selector_kind: GnnKind,
    pub selector_layers: usize,
    pub selector_hidden: usize,
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 || self.num_classes < 2 {
            return Err(Error::contract("feature_dim must be positive and num_classes >= 2"));
        }
        if self.encoder_layers == 0 || self.selector_layers == 0 {
            return Err(Error::contract("layer counts must be positive"));
        }
        if self.hidden == 0 || self.selector_hidden == 0 {
            return Err(Error::contract("hidden widths must be positive"));
        }
        Ok(())
    }
}

fn xavier(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Vec<f64> {
    scaled_xavier(rng, fan_in, fan_out, 1.0)
}

fn scaled_xavier(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, gain: f64) -> Vec<f64> {
    let limit = gain * (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..limit))
        .collect()
}

/// Uniform bias init. Zero biases would make each ReLU MLP positively
/// homogeneous, and constant node features then collapse every embedding
/// onto one ray.
fn bias_init(rng: &mut ChaCha8Rng, fan_in: usize, n: usize) -> Vec<f64> {
    let limit = 1.0 / (fan_in as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}

fn push_gnn(set: &mut ParamSet, rng: &mut ChaCha8Rng, prefix: &str, kind: GnnKind, layers: usize, in_dim: usize, hidden: usize) {
    let mut d = in_dim;
    for l in 0..layers {
        match kind {
            GnnKind::Gin => {
                set.push(format!("{prefix}.l{l}.w1"), vec![d, hidden], xavier(rng, d, hidden));
                set.push(format!("{prefix}.l{l}.b1"), vec![hidden], bias_init(rng, d, hidden));
                set.push(format!("{prefix}.l{l}.w2"), vec![hidden, hidden], xavier(rng, hidden, hidden));
                set.push(format!("{prefix}.l{l}.b2"), vec![hidden], bias_init(rng, hidden, hidden));
                set.push(format!("{prefix}.l{l}.eps"), vec![1, 1], vec![0.0]);
            }
            GnnKind::Gcn => {
                set.push(format!("{prefix}.l{l}.w"), vec![d, hidden], xavier(rng, d, hidden));
                set.push(format!("{prefix}.l{l}.b"), vec![hidden], bias_init(rng, d, hidden));
            }
        }
        d = hidden;
    }
}

/// Initialize every parameter of the model (encoder, classifier, selector
/// GNN and selector edge MLP) with Xavier-uniform weights and zero biases.
pub fn init_params(arch: &ArchConfig, rng: &mut ChaCha8Rng) -> Result<ParamSet> {
    arch.validate()?;
    let mut set = ParamSet::new();
    push_gnn(
        &mut set,
        rng,
        "enc",
        arch.encoder_kind,
        arch.encoder_layers,
        arch.feature_dim,
        arch.hidden,
    );
    // Sum pooling over whole graphs feeds the head embeddings two orders of
    // magnitude larger than unit scale; a small head init keeps the initial
    // logits from saturating the softmax.
    set.push(
        "clf.w",
        vec![arch.hidden, arch.num_classes],
        scaled_xavier(rng, arch.hidden, arch.num_classes, 0.1),
    );
    set.push("clf.b", vec![arch.num_classes], vec![0.0; arch.num_classes]);

    push_gnn(
        &mut set,
        rng,
        "sel.gnn",
        arch.selector_kind,
        arch.selector_layers,
        arch.feature_dim,
        arch.selector_hidden,
    );
    let f = arch.selector_hidden;
    set.push("sel.edge.w1", vec![3 * f, f], xavier(rng, 3 * f, f));
    set.push("sel.edge.b1", vec![f], bias_init(rng, 3 * f, f));
    // start near p = 1/2 so sampling explores both keeping and pruning
    set.push("sel.edge.w2", vec![f, 1], scaled_xavier(rng, f, 1, 0.1));
    set.push("sel.edge.b2", vec![1], vec![0.0]);
    Ok(set)
}

/// Leaf ids of one forward pass, aligned with the parameter order.
/// Parameters excluded from the pass map to `None`.
pub struct PassBinding {
    pub leaf_ids: Vec<Option<TensorId>>,
}

impl PassBinding {
    pub fn leaf(&self, set: &ParamSet, name: &str) -> Result<TensorId> {
        let idx = set
            .index_of(name)
            .ok_or_else(|| Error::contract(format!("unknown parameter {name}")))?;
        self.leaf_ids[idx]
            .ok_or_else(|| Error::contract(format!("parameter {name} not bound in this pass")))
    }
}

/// Create tape leaves for every parameter accepted by `include`.
pub fn bind_params(
    tape: &mut Tape,
    set: &ParamSet,
    include: impl Fn(&str) -> bool,
) -> Result<PassBinding> {
    let mut leaf_ids = Vec::with_capacity(set.len());
    for p in set.params() {
        if include(&p.name) {
            leaf_ids.push(Some(tape.leaf(p.data.clone(), p.shape.clone(), true)?));
        } else {
            leaf_ids.push(None);
        }
    }
    Ok(PassBinding { leaf_ids })
}

/// Bind every parameter as a constant leaf, for evaluation passes that do
/// not need gradients.
pub fn bind_params_frozen(tape: &mut Tape, set: &ParamSet) -> Result<PassBinding> {
    let mut leaf_ids = Vec::with_capacity(set.len());
    for p in set.params() {
        leaf_ids.push(Some(tape.leaf(p.data.clone(), p.shape.clone(), false)?));
    }
    Ok(PassBinding { leaf_ids })
}

/// Gradients in parameter order; `None` for parameters outside the pass.
pub fn collect_grads(tape: &Tape, binding: &PassBinding) -> Vec<Option<Vec<f64>>> {
    binding
        .leaf_ids
        .iter()
        .map(|id| {
            id.map(|id| {
                tape.grad(id)
                    .map(<[f64]>::to_vec)
                    .unwrap_or_else(|| vec![0.0; tape.value(id).len()])
            })
        })
        .collect()
}
