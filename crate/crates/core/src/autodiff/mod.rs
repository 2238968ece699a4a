//! Reverse-mode automatic differentiation over dense 64-bit tensors.
//!
//! A [`Tape`] owns every tensor of one forward pass (define-by-run; the tape
//! is rebuilt per pass). [`Tape::apply`] computes an operation forward and
//! records it when any input requires gradients; [`Tape::backward`] replays
//! the records in reverse creation order and accumulates `d loss / d tensor`
//! into every `requires_grad` tensor reachable from the loss.
//!
//! Gradients sum across uses within one backward pass, and across repeated
//! backward calls: calling `backward` twice without zeroing doubles them.

pub mod gradcheck;
pub mod kernels;

use std::sync::Arc;

use crate::error::{Error, Result};

pub type TensorId = usize;

/// Operation kinds understood by the tape. Index-carrying kinds share their
/// index buffers via `Arc` so batches can reuse them across layers for free.
#[derive(Clone, Debug)]
pub enum Op {
    MatMul,
    Add,
    Sub,
    Mul,
    ScalarMul { factor: f64 },
    ConcatLastDim,
    Relu,
    Sigmoid,
    Log,
    Exp,
    Square,
    Abs,
    SumAll,
    MeanAll,
    RowSum,
    LogSoftmaxRows,
    GatherRows { index: Arc<Vec<usize>> },
    ScatterAddRows { index: Arc<Vec<usize>>, out_rows: usize },
    AddBiasBroadcast,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::MatMul => "matmul",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "elementwise-mul",
            Op::ScalarMul { .. } => "scalar-mul",
            Op::ConcatLastDim => "concat-last-dim",
            Op::Relu => "relu",
            Op::Sigmoid => "sigmoid",
            Op::Log => "log",
            Op::Exp => "exp",
            Op::Square => "square",
            Op::Abs => "abs",
            Op::SumAll => "sum-all",
            Op::MeanAll => "mean-all",
            Op::RowSum => "row-sum",
            Op::LogSoftmaxRows => "log-softmax-rows",
            Op::GatherRows { .. } => "gather-rows",
            Op::ScatterAddRows { .. } => "scatter-add-rows",
            Op::AddBiasBroadcast => "add-bias-broadcast",
        }
    }
}

/// Dense tensor stored on a tape.
#[derive(Debug)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub requires_grad: bool,
    /// Accumulated gradient, same shape as `data`. Materialized by `backward`.
    pub grad: Option<Vec<f64>>,
    /// Record that produced this tensor; `None` for leaves.
    pub tape_id: Option<usize>,
}

struct Record {
    op: Op,
    inputs: Vec<TensorId>,
    output: TensorId,
}

/// Recorded computation of one forward pass.
#[derive(Default)]
pub struct Tape {
    tensors: Vec<Tensor>,
    records: Vec<Record>,
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

fn rows_cols(shape: &[usize]) -> Option<(usize, usize)> {
    match shape {
        [r, c] => Some((*r, *c)),
        _ => None,
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Insert a leaf tensor.
    pub fn leaf(&mut self, data: Vec<f64>, shape: Vec<usize>, requires_grad: bool) -> Result<TensorId> {
        if numel(&shape) != data.len() {
            return Err(Error::ShapeMismatch {
                op: "leaf",
                left: shape,
                right: vec![data.len()],
            });
        }
        let id = self.tensors.len();
        self.tensors.push(Tensor {
            shape,
            data,
            requires_grad,
            grad: None,
            tape_id: None,
        });
        Ok(id)
    }

    /// Leaf with `requires_grad = false`.
    pub fn constant(&mut self, data: Vec<f64>, shape: Vec<usize>) -> Result<TensorId> {
        self.leaf(data, shape, false)
    }

    /// Scalar constant of shape `[1]`.
    pub fn scalar(&mut self, v: f64) -> TensorId {
        self.leaf(vec![v], vec![1], false).expect("scalar leaf")
    }

    pub fn value(&self, id: TensorId) -> &[f64] {
        &self.tensors[id].data
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.tensors[id].shape
    }

    pub fn requires_grad(&self, id: TensorId) -> bool {
        self.tensors[id].requires_grad
    }

    pub fn grad(&self, id: TensorId) -> Option<&[f64]> {
        self.tensors[id].grad.as_deref()
    }

    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            t.grad = None;
        }
    }

    /// Apply `op` to `inputs`: computes the forward value and records a tape
    /// entry when any input requires gradients.
    pub fn apply(&mut self, op: Op, inputs: &[TensorId]) -> Result<TensorId> {
        let (data, shape) = self.forward(&op, inputs)?;
        let requires_grad = inputs.iter().any(|&i| self.tensors[i].requires_grad);
        let id = self.tensors.len();
        let tape_id = if requires_grad {
            let rec = self.records.len();
            self.records.push(Record {
                op,
                inputs: inputs.to_vec(),
                output: id,
            });
            Some(rec)
        } else {
            None
        };
        self.tensors.push(Tensor {
            shape,
            data,
            requires_grad,
            grad: None,
            tape_id,
        });
        Ok(id)
    }

    fn shape_err(&self, op: &'static str, a: TensorId, b: TensorId) -> Error {
        Error::ShapeMismatch {
            op,
            left: self.tensors[a].shape.clone(),
            right: self.tensors[b].shape.clone(),
        }
    }

    fn want_arity(&self, op: &Op, inputs: &[TensorId], n: usize) -> Result<()> {
        if inputs.len() != n {
            return Err(Error::contract(format!(
                "{} expects {} inputs, got {}",
                op.name(),
                n,
                inputs.len()
            )));
        }
        Ok(())
    }

    fn forward(&self, op: &Op, inputs: &[TensorId]) -> Result<(Vec<f64>, Vec<usize>)> {
        match op {
            Op::MatMul => {
                self.want_arity(op, inputs, 2)?;
                let (a, b) = (inputs[0], inputs[1]);
                let (m, ka) = rows_cols(self.shape(a))
                    .ok_or_else(|| self.shape_err("matmul", a, b))?;
                let (kb, n) = rows_cols(self.shape(b))
                    .ok_or_else(|| self.shape_err("matmul", a, b))?;
                if ka != kb {
                    return Err(self.shape_err("matmul", a, b));
                }
                Ok((kernels::matmul(self.value(a), self.value(b), m, ka, n), vec![m, n]))
            }
            Op::Add | Op::Sub | Op::Mul => {
                self.want_arity(op, inputs, 2)?;
                let (a, b) = (inputs[0], inputs[1]);
                if self.shape(a) != self.shape(b) {
                    return Err(self.shape_err(op.name(), a, b));
                }
                let (x, y) = (self.value(a), self.value(b));
                let data = match op {
                    Op::Add => x.iter().zip(y).map(|(p, q)| p + q).collect(),
                    Op::Sub => x.iter().zip(y).map(|(p, q)| p - q).collect(),
                    _ => x.iter().zip(y).map(|(p, q)| p * q).collect(),
                };
                Ok((data, self.shape(a).to_vec()))
            }
            Op::ScalarMul { factor } => {
                self.want_arity(op, inputs, 1)?;
                let a = inputs[0];
                let data = self.value(a).iter().map(|v| v * factor).collect();
                Ok((data, self.shape(a).to_vec()))
            }
            Op::ConcatLastDim => {
                if inputs.len() < 2 {
                    return Err(Error::contract("concat-last-dim expects at least 2 inputs"));
                }
                let (r0, _) = rows_cols(self.shape(inputs[0]))
                    .ok_or_else(|| self.shape_err("concat-last-dim", inputs[0], inputs[0]))?;
                let mut widths = Vec::with_capacity(inputs.len());
                for &i in inputs {
                    let (r, c) = rows_cols(self.shape(i))
                        .ok_or_else(|| self.shape_err("concat-last-dim", inputs[0], i))?;
                    if r != r0 {
                        return Err(self.shape_err("concat-last-dim", inputs[0], i));
                    }
                    widths.push(c);
                }
                let total: usize = widths.iter().sum();
                let mut data = vec![0.0; r0 * total];
                let mut off = 0;
                for (&i, &w) in inputs.iter().zip(&widths) {
                    let src = self.value(i);
                    for r in 0..r0 {
                        data[r * total + off..r * total + off + w]
                            .copy_from_slice(&src[r * w..(r + 1) * w]);
                    }
                    off += w;
                }
                Ok((data, vec![r0, total]))
            }
            Op::Relu => self.map_unary(inputs, |v| if v > 0.0 { v } else { 0.0 }),
            Op::Sigmoid => self.map_unary(inputs, sigmoid),
            Op::Log => self.map_unary(inputs, f64::ln),
            Op::Exp => self.map_unary(inputs, f64::exp),
            Op::Square => self.map_unary(inputs, |v| v * v),
            Op::Abs => self.map_unary(inputs, f64::abs),
            Op::SumAll => {
                self.want_arity(op, inputs, 1)?;
                Ok((vec![self.value(inputs[0]).iter().sum()], vec![1]))
            }
            Op::MeanAll => {
                self.want_arity(op, inputs, 1)?;
                let v = self.value(inputs[0]);
                if v.is_empty() {
                    return Err(Error::contract("mean-all of an empty tensor"));
                }
                Ok((vec![v.iter().sum::<f64>() / v.len() as f64], vec![1]))
            }
            Op::RowSum => {
                self.want_arity(op, inputs, 1)?;
                let a = inputs[0];
                let (r, c) = rows_cols(self.shape(a))
                    .ok_or_else(|| self.shape_err("row-sum", a, a))?;
                let src = self.value(a);
                let data = (0..r)
                    .map(|i| src[i * c..(i + 1) * c].iter().sum())
                    .collect();
                Ok((data, vec![r, 1]))
            }
            Op::LogSoftmaxRows => {
                self.want_arity(op, inputs, 1)?;
                let a = inputs[0];
                let (r, c) = rows_cols(self.shape(a))
                    .ok_or_else(|| self.shape_err("log-softmax-rows", a, a))?;
                let src = self.value(a);
                let mut data = vec![0.0; r * c];
                for i in 0..r {
                    let row = &src[i * c..(i + 1) * c];
                    // max subtraction keeps exp from overflowing
                    let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln() + mx;
                    for j in 0..c {
                        data[i * c + j] = row[j] - lse;
                    }
                }
                Ok((data, vec![r, c]))
            }
            Op::GatherRows { index } => {
                self.want_arity(op, inputs, 1)?;
                let a = inputs[0];
                let (r, c) = rows_cols(self.shape(a))
                    .ok_or_else(|| self.shape_err("gather-rows", a, a))?;
                let src = self.value(a);
                let mut data = vec![0.0; index.len() * c];
                for (q, &ix) in index.iter().enumerate() {
                    if ix >= r {
                        return Err(Error::IndexOutOfRange { row: q, index: ix, len: r });
                    }
                    data[q * c..(q + 1) * c].copy_from_slice(&src[ix * c..(ix + 1) * c]);
                }
                Ok((data, vec![index.len(), c]))
            }
            Op::ScatterAddRows { index, out_rows } => {
                self.want_arity(op, inputs, 1)?;
                let a = inputs[0];
                let (r, c) = rows_cols(self.shape(a))
                    .ok_or_else(|| self.shape_err("scatter-add-rows", a, a))?;
                if index.len() != r {
                    return Err(Error::contract(format!(
                        "scatter-add-rows index length {} does not match {} input rows",
                        index.len(),
                        r
                    )));
                }
                let src = self.value(a);
                let mut data = vec![0.0; out_rows * c];
                for (q, &ix) in index.iter().enumerate() {
                    if ix >= *out_rows {
                        return Err(Error::IndexOutOfRange { row: q, index: ix, len: *out_rows });
                    }
                    for j in 0..c {
                        data[ix * c + j] += src[q * c + j];
                    }
                }
                Ok((data, vec![*out_rows, c]))
            }
            Op::AddBiasBroadcast => {
                self.want_arity(op, inputs, 2)?;
                let (a, b) = (inputs[0], inputs[1]);
                let (r, c) = rows_cols(self.shape(a))
                    .ok_or_else(|| self.shape_err("add-bias-broadcast", a, b))?;
                let bias_len = match self.shape(b) {
                    [n] => *n,
                    [1, n] => *n,
                    _ => return Err(self.shape_err("add-bias-broadcast", a, b)),
                };
                if bias_len != c {
                    return Err(self.shape_err("add-bias-broadcast", a, b));
                }
                let (x, bias) = (self.value(a), self.value(b));
                let mut data = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        data[i * c + j] = x[i * c + j] + bias[j];
                    }
                }
                Ok((data, vec![r, c]))
            }
        }
    }

    fn map_unary(&self, inputs: &[TensorId], f: impl Fn(f64) -> f64) -> Result<(Vec<f64>, Vec<usize>)> {
        if inputs.len() != 1 {
            return Err(Error::contract("unary operation expects 1 input"));
        }
        let a = inputs[0];
        Ok((self.value(a).iter().map(|&v| f(v)).collect(), self.shape(a).to_vec()))
    }

    /// Populate gradients of every `requires_grad` tensor reachable from a
    /// scalar `loss`. Contributions from this pass add onto any existing
    /// gradients.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        if numel(&self.tensors[loss].shape) != 1 {
            return Err(Error::contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.tensors[loss].shape
            )));
        }
        // Adjoints for this pass only; merged into .grad at the end so that
        // repeated backward calls accumulate instead of compounding.
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; self.tensors.len()];
        adj[loss] = Some(vec![1.0]);

        for rec in self.records.iter().rev() {
            let out_adj = match adj[rec.output].take() {
                Some(a) => a,
                None => continue,
            };
            self.propagate(rec, &out_adj, &mut adj)?;
            adj[rec.output] = Some(out_adj);
        }

        for (id, a) in adj.into_iter().enumerate() {
            if let Some(a) = a {
                if self.tensors[id].requires_grad {
                    let len = self.tensors[id].data.len();
                    let g = self.tensors[id].grad.get_or_insert_with(|| vec![0.0; len]);
                    for (gi, ai) in g.iter_mut().zip(&a) {
                        *gi += ai;
                    }
                }
            }
        }
        Ok(())
    }

    fn accum(adj: &mut Vec<Option<Vec<f64>>>, id: TensorId, len: usize, add: impl Fn(&mut [f64])) {
        let slot = adj[id].get_or_insert_with(|| vec![0.0; len]);
        add(slot);
    }

    fn propagate(&self, rec: &Record, dout: &[f64], adj: &mut Vec<Option<Vec<f64>>>) -> Result<()> {
        let needs: Vec<bool> = rec
            .inputs
            .iter()
            .map(|&i| self.tensors[i].requires_grad)
            .collect();
        match &rec.op {
            Op::MatMul => {
                let (a, b) = (rec.inputs[0], rec.inputs[1]);
                let (m, k) = rows_cols(self.shape(a)).unwrap();
                let n = self.shape(b)[1];
                if needs[0] {
                    let da = kernels::matmul_nt(dout, self.value(b), m, n, k);
                    Self::accum(adj, a, m * k, |s| {
                        for (si, di) in s.iter_mut().zip(&da) {
                            *si += di;
                        }
                    });
                }
                if needs[1] {
                    let db = kernels::matmul_tn(self.value(a), dout, m, k, n);
                    Self::accum(adj, b, k * n, |s| {
                        for (si, di) in s.iter_mut().zip(&db) {
                            *si += di;
                        }
                    });
                }
            }
            Op::Add => {
                for (slot, &i) in needs.iter().zip(&rec.inputs) {
                    if *slot {
                        Self::accum(adj, i, dout.len(), |s| {
                            for (si, di) in s.iter_mut().zip(dout) {
                                *si += di;
                            }
                        });
                    }
                }
            }
            Op::Sub => {
                let (a, b) = (rec.inputs[0], rec.inputs[1]);
                if needs[0] {
                    Self::accum(adj, a, dout.len(), |s| {
                        for (si, di) in s.iter_mut().zip(dout) {
                            *si += di;
                        }
                    });
                }
                if needs[1] {
                    Self::accum(adj, b, dout.len(), |s| {
                        for (si, di) in s.iter_mut().zip(dout) {
                            *si -= di;
                        }
                    });
                }
            }
            Op::Mul => {
                let (a, b) = (rec.inputs[0], rec.inputs[1]);
                if needs[0] {
                    let bv = self.value(b);
                    Self::accum(adj, a, dout.len(), |s| {
                        for ((si, di), vi) in s.iter_mut().zip(dout).zip(bv) {
                            *si += di * vi;
                        }
                    });
                }
                if needs[1] {
                    let av = self.value(a);
                    Self::accum(adj, b, dout.len(), |s| {
                        for ((si, di), vi) in s.iter_mut().zip(dout).zip(av) {
                            *si += di * vi;
                        }
                    });
                }
            }
            Op::ScalarMul { factor } => {
                let a = rec.inputs[0];
                if needs[0] {
                    Self::accum(adj, a, dout.len(), |s| {
                        for (si, di) in s.iter_mut().zip(dout) {
                            *si += di * factor;
                        }
                    });
                }
            }
            Op::ConcatLastDim => {
                let rows = self.shape(rec.inputs[0])[0];
                let total: usize = rec.inputs.iter().map(|&i| self.shape(i)[1]).sum();
                let mut off = 0;
                for (&i, need) in rec.inputs.iter().zip(&needs) {
                    let w = self.shape(i)[1];
                    if *need {
                        Self::accum(adj, i, rows * w, |s| {
                            for r in 0..rows {
                                for j in 0..w {
                                    s[r * w + j] += dout[r * total + off + j];
                                }
                            }
                        });
                    }
                    off += w;
                }
            }
            Op::Relu => {
                let a = rec.inputs[0];
                if needs[0] {
                    let x = self.value(a);
                    // subgradient 0 at exactly 0
                    Self::accum(adj, a, dout.len(), |s| {
                        for ((si, di), xi) in s.iter_mut().zip(dout).zip(x) {
                            if *xi > 0.0 {
                                *si += di;
                            }
                        }
                    });
                }
            }
            Op::Sigmoid => {
                let a = rec.inputs[0];
                if needs[0] {
                    let y = self.value(rec.output);
                    Self::accum(adj, a, dout.len(), |s| {
                        for ((si, di), yi) in s.iter_mut().zip(dout).zip(y) {
                            *si += di * yi * (1.0 - yi);
                        }
                    });
                }
            }
            Op::Log => {
                let a = rec.inputs[0];
                if needs[0] {
                    let x = self.value(a);
                    Self::accum(adj, a, dout.len(), |s| {
                        for ((si, di), xi) in s.iter_mut().zip(dout).zip(x) {
                            *si += di / xi;
                        }
                    });
                }
            }
            Op::Exp => {
                let a = rec.inputs[0];
                if needs[0] {
                    let y = self.value(rec.output);
                    Self::accum(adj, a, dout.len(), |s| {
                        for ((si, di), yi) in s.iter_mut().zip(dout).zip(y) {
                            *si += di * yi;
                        }
                    });
                }
            }
            Op::Square => {
                let a = rec.inputs[0];
                if needs[0] {
                    let x = self.value(a);
                    Self::accum(adj, a, dout.len(), |s| {
                        for ((si, di), xi) in s.iter_mut().zip(dout).zip(x) {
                            *si += di * 2.0 * xi;
                        }
                    });
                }
            }
            Op::Abs => {
                let a = rec.inputs[0];
                if needs[0] {
                    let x = self.value(a);
                    // subgradient 0 at the kink
                    Self::accum(adj, a, dout.len(), |s| {
                        for ((si, di), xi) in s.iter_mut().zip(dout).zip(x) {
                            *si += di * if *xi > 0.0 {
                                1.0
                            } else if *xi < 0.0 {
                                -1.0
                            } else {
                                0.0
                            };
                        }
                    });
                }
            }
            Op::SumAll => {
                let a = rec.inputs[0];
                if needs[0] {
                    let d = dout[0];
                    let len = self.value(a).len();
                    Self::accum(adj, a, len, |s| {
                        for si in s.iter_mut() {
                            *si += d;
                        }
                    });
                }
            }
            Op::MeanAll => {
                let a = rec.inputs[0];
                if needs[0] {
                    let len = self.value(a).len();
                    let d = dout[0] / len as f64;
                    Self::accum(adj, a, len, |s| {
                        for si in s.iter_mut() {
                            *si += d;
                        }
                    });
                }
            }
            Op::RowSum => {
                let a = rec.inputs[0];
                if needs[0] {
                    let (r, c) = rows_cols(self.shape(a)).unwrap();
                    Self::accum(adj, a, r * c, |s| {
                        for i in 0..r {
                            for j in 0..c {
                                s[i * c + j] += dout[i];
                            }
                        }
                    });
                }
            }
            Op::LogSoftmaxRows => {
                let a = rec.inputs[0];
                if needs[0] {
                    let (r, c) = rows_cols(self.shape(a)).unwrap();
                    let y = self.value(rec.output);
                    Self::accum(adj, a, r * c, |s| {
                        for i in 0..r {
                            let dsum: f64 = dout[i * c..(i + 1) * c].iter().sum();
                            for j in 0..c {
                                s[i * c + j] += dout[i * c + j] - y[i * c + j].exp() * dsum;
                            }
                        }
                    });
                }
            }
            Op::GatherRows { index } => {
                let a = rec.inputs[0];
                if needs[0] {
                    let (r, c) = rows_cols(self.shape(a)).unwrap();
                    Self::accum(adj, a, r * c, |s| {
                        for (q, &ix) in index.iter().enumerate() {
                            for j in 0..c {
                                s[ix * c + j] += dout[q * c + j];
                            }
                        }
                    });
                }
            }
            Op::ScatterAddRows { index, .. } => {
                let a = rec.inputs[0];
                if needs[0] {
                    let (r, c) = rows_cols(self.shape(a)).unwrap();
                    Self::accum(adj, a, r * c, |s| {
                        for (q, &ix) in index.iter().enumerate() {
                            for j in 0..c {
                                s[q * c + j] += dout[ix * c + j];
                            }
                        }
                    });
                }
            }
            Op::AddBiasBroadcast => {
                let (a, b) = (rec.inputs[0], rec.inputs[1]);
                let (r, c) = rows_cols(self.shape(a)).unwrap();
                if needs[0] {
                    Self::accum(adj, a, r * c, |s| {
                        for (si, di) in s.iter_mut().zip(dout) {
                            *si += di;
                        }
                    });
                }
                if needs[1] {
                    let blen = self.value(b).len();
                    Self::accum(adj, b, blen, |s| {
                        for i in 0..r {
                            for j in 0..c {
                                s[j] += dout[i * c + j];
                            }
                        }
                    });
                }
            }
        }
        Ok(())
    }

    // Convenience wrappers around `apply`.

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.apply(Op::MatMul, &[a, b])
    }
    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.apply(Op::Add, &[a, b])
    }
    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.apply(Op::Sub, &[a, b])
    }
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.apply(Op::Mul, &[a, b])
    }
    pub fn scalar_mul(&mut self, a: TensorId, factor: f64) -> Result<TensorId> {
        self.apply(Op::ScalarMul { factor }, &[a])
    }
    pub fn concat_last_dim(&mut self, parts: &[TensorId]) -> Result<TensorId> {
        self.apply(Op::ConcatLastDim, parts)
    }
    pub fn relu(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::Relu, &[a])
    }
    pub fn sigmoid(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::Sigmoid, &[a])
    }
    pub fn log(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::Log, &[a])
    }
    pub fn exp(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::Exp, &[a])
    }
    pub fn square(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::Square, &[a])
    }
    pub fn abs(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::Abs, &[a])
    }
    pub fn sum_all(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::SumAll, &[a])
    }
    pub fn mean_all(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::MeanAll, &[a])
    }
    pub fn row_sum(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::RowSum, &[a])
    }
    pub fn log_softmax_rows(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(Op::LogSoftmaxRows, &[a])
    }
    pub fn gather_rows(&mut self, a: TensorId, index: Arc<Vec<usize>>) -> Result<TensorId> {
        self.apply(Op::GatherRows { index }, &[a])
    }
    pub fn scatter_add_rows(
        &mut self,
        a: TensorId,
        index: Arc<Vec<usize>>,
        out_rows: usize,
    ) -> Result<TensorId> {
        self.apply(Op::ScatterAddRows { index, out_rows }, &[a])
    }
    pub fn add_bias(&mut self, a: TensorId, bias: TensorId) -> Result<TensorId> {
        self.apply(Op::AddBiasBroadcast, &[a, bias])
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable logistic function, shared with the selector.
pub fn sigmoid_scalar(x: f64) -> f64 {
    sigmoid(x)
}
