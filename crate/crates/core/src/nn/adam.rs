//! Adam with bias correction, specialized to the model's parameter layout.

use super::{Gradients, MlpModel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First/second moment estimates plus the step counter, shaped like the
/// model they optimize.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m_weights: Vec<Matrix>,
    pub v_weights: Vec<Matrix>,
    pub m_biases: Vec<Vec<f64>>,
    pub v_biases: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        let zeros_w = || {
            model
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect::<Vec<_>>()
        };
        let zeros_b = || {
            model
                .biases
                .iter()
                .map(|b| vec![0.0; b.len()])
                .collect::<Vec<_>>()
        };
        AdamState {
            m_weights: zeros_w(),
            v_weights: zeros_w(),
            m_biases: zeros_b(),
            v_biases: zeros_b(),
            t: 0,
        }
    }
}

fn update_slice(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, t: u64) {
    let c1 = 1.0 - BETA1.powi(t as i32);
    let c2 = 1.0 - BETA2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

/// Applies one Adam update in place: advances `state.t`, then moves every
/// parameter by `-lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(
    model: &mut MlpModel,
    state: &mut AdamState,
    grads: &Gradients,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    if grads.weights.len() != model.weights.len() || grads.biases.len() != model.biases.len() {
        return Err(Error::Shape("gradient layout does not match model".into()));
    }
    state.t += 1;
    let t = state.t;
    for l in 0..model.weights.len() {
        if grads.weights[l].rows() != model.weights[l].rows()
            || grads.weights[l].cols() != model.weights[l].cols()
            || grads.biases[l].len() != model.biases[l].len()
        {
            return Err(Error::Shape(format!("gradient shape mismatch at layer {l}")));
        }
        for r in 0..model.weights[l].rows() {
            update_slice(
                model.weights[l].row_mut(r),
                grads.weights[l].row(r),
                state.m_weights[l].row_mut(r),
                state.v_weights[l].row_mut(r),
                lr,
                t,
            );
        }
        update_slice(
            &mut model.biases[l],
            &grads.biases[l],
            &mut state.m_biases[l],
            &mut state.v_biases[l],
            lr,
            t,
        );
    }
    Ok(())
}
