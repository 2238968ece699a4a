//! Adam with bias correction, one state slot per parameter.

use crate::error::{Error, Result};
use crate::model::ParamSet;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

/// First/second moment buffers and per-parameter step counters. Parameters
/// absent from a pass (gradient `None`) keep their state untouched.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: Vec<u64>,
}

impl AdamState {
    pub fn new(set: &ParamSet) -> Self {
        AdamState {
            m: set.params().iter().map(|p| vec![0.0; p.data.len()]).collect(),
            v: set.params().iter().map(|p| vec![0.0; p.data.len()]).collect(),
            step: vec![0; set.len()],
        }
    }
}

/// One optimizer step over every parameter with a gradient.
pub fn adam_step(
    set: &mut ParamSet,
    grads: &[Option<Vec<f64>>],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if grads.len() != set.len() {
        return Err(Error::contract(format!(
            "{} gradients for {} parameters",
            grads.len(),
            set.len()
        )));
    }
    for (pi, grad) in grads.iter().enumerate() {
        let Some(grad) = grad else { continue };
        let param = &mut set.params_mut()[pi];
        if grad.len() != param.data.len() {
            return Err(Error::ShapeMismatch {
                op: "adam_step",
                left: param.shape.clone(),
                right: vec![grad.len()],
            });
        }
        state.step[pi] += 1;
        let t = state.step[pi] as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let (m, v) = (&mut state.m[pi], &mut state.v[pi]);
        for ((x, &g), (mi, vi)) in param
            .data
            .iter_mut()
            .zip(grad)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mi = BETA1 * *mi + (1.0 - BETA1) * g;
            *vi = BETA2 * *vi + (1.0 - BETA2) * g * g;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *x -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(data: Vec<f64>) -> ParamSet {
        let mut set = ParamSet::new();
        let n = data.len();
        set.push("p", vec![n], data);
        set
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut set = one_param(vec![1.0, -2.0, 0.5]);
        let mut st = AdamState::new(&set);
        let before = set.get("p").unwrap().data.clone();
        for _ in 0..5 {
            adam_step(&mut set, &[Some(vec![0.0; 3])], &mut st, 1e-3).unwrap();
        }
        assert_eq!(set.get("p").unwrap().data, before);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // at t=1 the bias-corrected ratio is g/|g|, so the update is ~lr
        let mut set = one_param(vec![0.0]);
        let mut st = AdamState::new(&set);
        adam_step(&mut set, &[Some(vec![0.5])], &mut st, 1e-3).unwrap();
        let moved = set.get("p").unwrap().data[0].abs();
        assert!((moved - 1e-3).abs() < 1e-9, "{moved}");
    }

    #[test]
    fn identical_runs_take_identical_trajectories() {
        let run = || {
            let mut set = one_param(vec![1.0, 2.0]);
            let mut st = AdamState::new(&set);
            for k in 0..20 {
                let g = vec![(k as f64 * 0.1).sin(), -0.3];
                adam_step(&mut set, &[Some(g)], &mut st, 1e-2).unwrap();
            }
            set.get("p").unwrap().data.clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut set = one_param(vec![0.0, 0.0]);
        let mut st = AdamState::new(&set);
        assert!(adam_step(&mut set, &[Some(vec![1.0])], &mut st, 1e-3).is_err());
        assert!(adam_step(&mut set, &[], &mut st, 1e-3).is_err());
    }

    #[test]
    fn skipped_parameters_keep_their_state() {
        let mut set = one_param(vec![0.0]);
        let mut st = AdamState::new(&set);
        adam_step(&mut set, &[None], &mut st, 1e-3).unwrap();
        assert_eq!(st.step[0], 0);
        adam_step(&mut set, &[Some(vec![1.0])], &mut st, 1e-3).unwrap();
        assert_eq!(st.step[0], 1);
    }
}
