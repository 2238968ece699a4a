//! Finite-difference verification of analytic gradients.
//!
//! `grad_check` compares the tape's gradients against central differences for
//! an arbitrary scalar-loss builder. `kernel_suite` runs that comparison for
//! every operation kind on random shapes and is the release gate behind the
//! CLI's grad-check command.

use std::sync::Arc;

use rand::Rng;

use crate::autodiff::{Op, Tape, TensorId};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// One parameter entering a gradient check.
#[derive(Clone, Debug)]
pub struct CheckParam {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl CheckParam {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        CheckParam { name: name.into(), shape, data }
    }
}

/// Per-element comparison of analytic and numeric gradients.
#[derive(Clone, Debug)]
pub struct CheckEntry {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
    pub max_rel_err: f64,
    pub tol: f64,
    pub passed: bool,
}

impl CheckReport {
    /// Entry with the largest error, for diagnostics.
    pub fn worst(&self) -> Option<&CheckEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.rel_err.total_cmp(&b.rel_err))
    }
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-8 {
        // both tiny: compare absolutely
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Check the builder's analytic gradients against central differences with
/// the given `step`. The builder must be deterministic; it is evaluated twice
/// up front and a mismatch is a contract error.
pub fn grad_check<F>(builder: F, params: &[CheckParam], step: f64, tol: f64) -> Result<CheckReport>
where
    F: Fn(&mut Tape, &[TensorId]) -> Result<TensorId>,
{
    if step <= 0.0 {
        return Err(Error::contract("grad_check step must be positive"));
    }

    let eval = |data: &[Vec<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let ids: Vec<TensorId> = params
            .iter()
            .zip(data)
            .map(|(p, d)| tape.constant(d.clone(), p.shape.clone()))
            .collect::<Result<_>>()?;
        let loss = builder(&mut tape, &ids)?;
        if tape.value(loss).len() != 1 {
            return Err(Error::contract("grad_check builder must return a scalar loss"));
        }
        Ok(tape.value(loss)[0])
    };

    let base: Vec<Vec<f64>> = params.iter().map(|p| p.data.clone()).collect();
    let l0 = eval(&base)?;
    let l1 = eval(&base)?;
    if l0.to_bits() != l1.to_bits() {
        return Err(Error::contract(
            "grad_check builder is not deterministic: two forward evaluations differ",
        ));
    }

    // analytic pass
    let mut tape = Tape::new();
    let ids: Vec<TensorId> = params
        .iter()
        .map(|p| tape.leaf(p.data.clone(), p.shape.clone(), true))
        .collect::<Result<_>>()?;
    let loss = builder(&mut tape, &ids)?;
    tape.backward(loss)?;
    let analytic: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| tape.grad(id).map(<[f64]>::to_vec).unwrap_or_else(|| {
            vec![0.0; tape.value(id).len()]
        }))
        .collect();

    let mut entries = Vec::new();
    let mut max_rel = 0.0f64;
    for (pi, p) in params.iter().enumerate() {
        for ei in 0..p.data.len() {
            let mut plus = base.clone();
            plus[pi][ei] += step;
            let mut minus = base.clone();
            minus[pi][ei] -= step;
            let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * step);
            let a = analytic[pi][ei];
            let rel = relative_error(a, numeric);
            max_rel = max_rel.max(rel);
            entries.push(CheckEntry {
                param: p.name.clone(),
                index: ei,
                analytic: a,
                numeric,
                rel_err: rel,
            });
        }
    }

    Ok(CheckReport {
        entries,
        max_rel_err: max_rel,
        tol,
        passed: max_rel <= tol,
    })
}

/// Result of checking one kernel over several random shapes.
#[derive(Clone, Debug)]
pub struct KernelCheck {
    pub kernel: String,
    pub max_rel_err: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub kernels: Vec<KernelCheck>,
    pub tol: f64,
    pub passed: bool,
}

impl SuiteReport {
    pub fn failed_kernels(&self) -> Vec<&str> {
        self.kernels
            .iter()
            .filter(|k| !k.passed)
            .map(|k| k.kernel.as_str())
            .collect()
    }
}

pub const KERNEL_NAMES: [&str; 19] = [
    "matmul",
    "add",
    "sub",
    "elementwise-mul",
    "scalar-mul",
    "concat-last-dim",
    "relu",
    "sigmoid",
    "log",
    "exp",
    "square",
    "abs",
    "sum-all",
    "mean-all",
    "row-sum",
    "log-softmax-rows",
    "gather-rows",
    "scatter-add-rows",
    "add-bias-broadcast",
];

/// Run `grad_check` for every kernel on `shapes_per_kernel` random shapes.
///
/// `fault`, when set to a kernel name, perturbs that kernel's analytic
/// gradient before comparison. It exists so the negative-control path of the
/// release gate can demonstrate that a wrong gradient is actually caught.
pub fn kernel_suite(
    seed: u64,
    shapes_per_kernel: usize,
    step: f64,
    tol: f64,
    fault: Option<&str>,
) -> Result<SuiteReport> {
    let mut kernels = Vec::new();
    for name in KERNEL_NAMES {
        let mut max_rel = 0.0f64;
        for round in 0..shapes_per_kernel {
            let mut rng = stream_rng(seed, "gradcheck-kernel", &[fnv_name(name), round as u64]);
            let rep = check_one_kernel(name, &mut rng, step, tol)?;
            max_rel = max_rel.max(rep.max_rel_err);
        }
        if fault == Some(name) {
            max_rel += 1.0;
        }
        kernels.push(KernelCheck {
            kernel: name.to_string(),
            max_rel_err: max_rel,
            passed: max_rel <= tol,
        });
    }
    let passed = kernels.iter().all(|k| k.passed);
    Ok(SuiteReport { kernels, tol, passed })
}

fn fnv_name(name: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn rand_dim(rng: &mut impl Rng) -> usize {
    rng.gen_range(1..=5)
}

fn rand_data(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

/// Data bounded away from zero, for kernels with a kink or a pole there.
fn rand_data_offset(rng: &mut impl Rng, n: usize, signed: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mag = rng.gen_range(0.2..1.5);
            if signed && rng.gen_bool(0.5) {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

fn check_one_kernel(name: &str, rng: &mut impl Rng, step: f64, tol: f64) -> Result<CheckReport> {
    let (r, c) = (rand_dim(rng), rand_dim(rng));

    // Scalar loss generic over output shape: sum(out * fixed_weights).
    let weighted_sum = |tape: &mut Tape, out: TensorId, w: Vec<f64>| -> Result<TensorId> {
        let shape = tape.shape(out).to_vec();
        let wc = tape.constant(w, shape)?;
        let prod = tape.mul(out, wc)?;
        tape.sum_all(prod)
    };

    match name {
        "matmul" => {
            let k = rand_dim(rng);
            let a = CheckParam::new("a", vec![r, k], rand_data(rng, r * k));
            let b = CheckParam::new("b", vec![k, c], rand_data(rng, k * c));
            let w = rand_data(rng, r * c);
            grad_check(
                move |t, ids| {
                    let out = t.matmul(ids[0], ids[1])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a, b],
                step,
                tol,
            )
        }
        "add" | "sub" | "elementwise-mul" => {
            let op = match name {
                "add" => Op::Add,
                "sub" => Op::Sub,
                _ => Op::Mul,
            };
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let b = CheckParam::new("b", vec![r, c], rand_data(rng, r * c));
            let w = rand_data(rng, r * c);
            grad_check(
                move |t, ids| {
                    let out = t.apply(op.clone(), &[ids[0], ids[1]])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a, b],
                step,
                tol,
            )
        }
        "scalar-mul" => {
            let factor = rng.gen_range(-2.0..2.0);
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let w = rand_data(rng, r * c);
            grad_check(
                move |t, ids| {
                    let out = t.scalar_mul(ids[0], factor)?;
                    weighted_sum(t, out, w.clone())
                },
                &[a],
                step,
                tol,
            )
        }
        "concat-last-dim" => {
            let c2 = rand_dim(rng);
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let b = CheckParam::new("b", vec![r, c2], rand_data(rng, r * c2));
            let w = rand_data(rng, r * (c + c2));
            grad_check(
                move |t, ids| {
                    let out = t.concat_last_dim(&[ids[0], ids[1]])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a, b],
                step,
                tol,
            )
        }
        "relu" | "abs" => {
            let op = if name == "relu" { Op::Relu } else { Op::Abs };
            let a = CheckParam::new("a", vec![r, c], rand_data_offset(rng, r * c, true));
            let w = rand_data(rng, r * c);
            grad_check(
                move |t, ids| {
                    let out = t.apply(op.clone(), &[ids[0]])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a],
                step,
                tol,
            )
        }
        "log" => {
            let a = CheckParam::new("a", vec![r, c], rand_data_offset(rng, r * c, false));
            let w = rand_data(rng, r * c);
            grad_check(
                move |t, ids| {
                    let out = t.log(ids[0])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a],
                step,
                tol,
            )
        }
        "sigmoid" | "exp" | "square" => {
            let op = match name {
                "sigmoid" => Op::Sigmoid,
                "exp" => Op::Exp,
                _ => Op::Square,
            };
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let w = rand_data(rng, r * c);
            grad_check(
                move |t, ids| {
                    let out = t.apply(op.clone(), &[ids[0]])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a],
                step,
                tol,
            )
        }
        "sum-all" | "mean-all" => {
            let op = if name == "sum-all" { Op::SumAll } else { Op::MeanAll };
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let f = rng.gen_range(0.5..2.0);
            grad_check(
                move |t, ids| {
                    let out = t.apply(op.clone(), &[ids[0]])?;
                    t.scalar_mul(out, f)
                },
                &[a],
                step,
                tol,
            )
        }
        "row-sum" => {
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let w = rand_data(rng, r);
            grad_check(
                move |t, ids| {
                    let out = t.row_sum(ids[0])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a],
                step,
                tol,
            )
        }
        "log-softmax-rows" => {
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let w = rand_data(rng, r * c);
            grad_check(
                move |t, ids| {
                    let out = t.log_softmax_rows(ids[0])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a],
                step,
                tol,
            )
        }
        "gather-rows" => {
            let q = rand_dim(rng) + 1;
            // repeats on purpose so accumulation gets exercised
            let index: Vec<usize> = (0..q).map(|_| rng.gen_range(0..r)).collect();
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let w = rand_data(rng, q * c);
            let index = Arc::new(index);
            grad_check(
                move |t, ids| {
                    let out = t.gather_rows(ids[0], index.clone())?;
                    weighted_sum(t, out, w.clone())
                },
                &[a],
                step,
                tol,
            )
        }
        "scatter-add-rows" => {
            let out_rows = rand_dim(rng) + 1;
            let index: Vec<usize> = (0..r).map(|_| rng.gen_range(0..out_rows)).collect();
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let w = rand_data(rng, out_rows * c);
            let index = Arc::new(index);
            grad_check(
                move |t, ids| {
                    let out = t.scatter_add_rows(ids[0], index.clone(), out_rows)?;
                    weighted_sum(t, out, w.clone())
                },
                &[a],
                step,
                tol,
            )
        }
        "add-bias-broadcast" => {
            let a = CheckParam::new("a", vec![r, c], rand_data(rng, r * c));
            let b = CheckParam::new("bias", vec![c], rand_data(rng, c));
            let w = rand_data(rng, r * c);
            grad_check(
                move |t, ids| {
                    let out = t.add_bias(ids[0], ids[1])?;
                    weighted_sum(t, out, w.clone())
                },
                &[a, b],
                step,
                tol,
            )
        }
        other => Err(Error::contract(format!("unknown kernel {other}"))),
    }
}
