//! From-scratch dense network: rectified hidden layers, linear output,
//! inverted dropout, analytic backprop.
//!
//! The production architecture is fixed small (two hidden layers of 64 with
//! a scalar output); the machinery below is written over an arbitrary layer
//! stack so tests can gradient-check tiny models cheaply. All arithmetic is
//! 64-bit; every random draw comes from an explicitly seeded stream, and a
//! layer's draws happen in a documented fixed order (layer by layer, output
//! unit major), so models are bitwise reproducible per seed.

mod adam;
mod persist;
mod train;

pub use adam::{adam_step, AdamState};
pub use persist::{load_model, save_model};
pub use train::{train, TrainConfig, TrainHistory};

use crate::dataset::Normalizer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

pub const HIDDEN_WIDTH: usize = 64;
pub const HIDDEN_LAYERS: usize = 2;
pub const DEFAULT_DROPOUT: f64 = 0.25;

/// Total parameter count of the production architecture
/// (`input -> 64 -> 64 -> 1`, biases included).
pub fn param_count(input_dim: usize) -> usize {
    (input_dim * HIDDEN_WIDTH + HIDDEN_WIDTH)
        + (HIDDEN_WIDTH * HIDDEN_WIDTH + HIDDEN_WIDTH)
        + (HIDDEN_WIDTH + 1)
}

/// Network shape and dropout rate. Defaults are the production
/// architecture; tests shrink `hidden_width` to keep oracles cheap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub dropout_rate: f64,
}

impl MlpConfig {
    pub fn for_input_dim(input_dim: usize) -> Self {
        MlpConfig {
            input_dim,
            hidden_layers: HIDDEN_LAYERS,
            hidden_width: HIDDEN_WIDTH,
            dropout_rate: DEFAULT_DROPOUT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 1 || self.hidden_layers < 1 || self.hidden_width < 1 {
            return Err(Error::Config(format!("degenerate network shape {self:?}")));
        }
        if !(self.dropout_rate >= 0.0 && self.dropout_rate < 1.0) {
            return Err(Error::Config(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// Layer input/output sizes, in order.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 1);
        let mut prev = self.input_dim;
        for _ in 0..self.hidden_layers {
            dims.push((prev, self.hidden_width));
            prev = self.hidden_width;
        }
        dims.push((prev, 1));
        dims
    }
}

/// Weights, biases, and the input normalizer of one trained (or freshly
/// initialized) network. `weights[l]` stores one row per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub normalizer: Normalizer,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Actual parameter count of this instance.
    pub fn param_total(&self) -> usize {
        let w: usize = self.weights.iter().map(|m| m.rows() * m.cols()).sum();
        let b: usize = self.biases.iter().map(Vec::len).sum();
        w + b
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let dims = self.config.layer_dims();
        if self.weights.len() != dims.len() || self.biases.len() != dims.len() {
            return Err(Error::Shape(format!(
                "expected {} layers, got {} weight and {} bias sets",
                dims.len(),
                self.weights.len(),
                self.biases.len()
            )));
        }
        for (l, ((fan_in, fan_out), (w, b))) in
            dims.iter().zip(self.weights.iter().zip(&self.biases)).enumerate()
        {
            if w.rows() != *fan_out || w.cols() != *fan_in || b.len() != *fan_out {
                return Err(Error::Shape(format!(
                    "layer {l} shape mismatch: weights {}x{}, biases {}, expected {fan_out}x{fan_in}",
                    w.rows(),
                    w.cols(),
                    b.len()
                )));
            }
        }
        if self.normalizer.dim() != self.config.input_dim {
            return Err(Error::Shape(format!(
                "normalizer dimension {} does not match input dimension {}",
                self.normalizer.dim(),
                self.config.input_dim
            )));
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases. The normalizer starts as identity
/// and is replaced by the training loop once fitted.
pub fn init_model(config: &MlpConfig, seed: u64) -> Result<MlpModel> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for (fan_in, fan_out) in config.layer_dims() {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut w = Matrix::zeros(fan_out, fan_in);
        for unit in 0..fan_out {
            for x in w.row_mut(unit) {
                *x = rng.gen_range(-bound..=bound);
            }
        }
        weights.push(w);
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpModel {
        config: *config,
        normalizer: Normalizer {
            mean: vec![0.0; config.input_dim],
            sd: vec![1.0; config.input_dim],
        },
        weights,
        biases,
    })
}

/// Inverted-dropout masks for one batch: entries are `0` (dropped) or
/// `1/(1-rate)` (kept, rescaled), one matrix per hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub hidden: Vec<Matrix>,
}

/// Samples masks for a batch of `rows` inputs, deterministic per seed.
/// Draw order: hidden layer by hidden layer, row by row, unit by unit.
pub fn sample_masks(config: &MlpConfig, rows: usize, seed: u64) -> DropoutMasks {
    let rate = config.dropout_rate;
    let keep_scale = 1.0 / (1.0 - rate);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let hidden = (0..config.hidden_layers)
        .map(|_| {
            let mut m = Matrix::zeros(rows, config.hidden_width);
            for r in 0..rows {
                for x in m.row_mut(r) {
                    let u: f64 = rng.gen();
                    *x = if u < rate { 0.0 } else { keep_scale };
                }
            }
            m
        })
        .collect();
    DropoutMasks { hidden }
}

/// How a forward pass treats inputs and dropout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForwardMode {
    /// Raw features; the model's normalizer is applied, no dropout.
    Infer,
    /// Pre-normalized inputs (the train loop owns normalization); inverted
    /// dropout drawn from the given seed after each hidden activation.
    Train { dropout_seed: u64 },
}

struct ForwardCache {
    /// Post-activation, post-dropout output of each layer; index 0 is the
    /// (normalized) input batch.
    activations: Vec<Matrix>,
    /// Pre-activation values of each layer.
    pre: Vec<Matrix>,
}

fn forward_cached(
    model: &MlpModel,
    normalized: &Matrix,
    masks: Option<&DropoutMasks>,
) -> Result<(Vec<f64>, ForwardCache)> {
    model.validate()?;
    if normalized.cols() != model.config.input_dim {
        return Err(Error::Shape(format!(
            "forward expects {} input columns, got {}",
            model.config.input_dim,
            normalized.cols()
        )));
    }
    if let Some(m) = masks {
        if m.hidden.len() != model.config.hidden_layers
            || m.hidden.iter().any(|h| {
                h.rows() != normalized.rows() || h.cols() != model.config.hidden_width
            })
        {
            return Err(Error::Shape("dropout mask shape mismatch".into()));
        }
    }
    let n = normalized.rows();
    let layers = model.weights.len();
    let mut activations = Vec::with_capacity(layers + 1);
    let mut pre = Vec::with_capacity(layers);
    activations.push(normalized.clone());
    for l in 0..layers {
        let input = &activations[l];
        let w = &model.weights[l];
        let b = &model.biases[l];
        let out_dim = w.rows();
        let mut z = Matrix::zeros(n, out_dim);
        for r in 0..n {
            let x = input.row(r);
            let zr = z.row_mut(r);
            for (u, zu) in zr.iter_mut().enumerate() {
                let wrow = w.row(u);
                let mut acc = b[u];
                for (xi, wi) in x.iter().zip(wrow) {
                    acc += xi * wi;
                }
                *zu = acc;
            }
        }
        let a = if l + 1 < layers {
            let mut a = z.clone();
            for r in 0..n {
                let row = a.row_mut(r);
                for v in row.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                if let Some(m) = masks {
                    let mrow = m.hidden[l].row(r);
                    for (v, s) in row.iter_mut().zip(mrow) {
                        *v *= s;
                    }
                }
            }
            a
        } else {
            z.clone()
        };
        pre.push(z);
        activations.push(a);
    }
    let out = activations
        .last()
        .expect("at least one layer")
        .as_slice()
        .to_vec();
    Ok((out, ForwardCache { activations, pre }))
}

/// One prediction per input row.
pub fn forward(model: &MlpModel, inputs: &Matrix, mode: ForwardMode) -> Result<Vec<f64>> {
    match mode {
        ForwardMode::Infer => {
            let mut normalized = inputs.clone();
            model.normalizer.apply_in_place(&mut normalized)?;
            Ok(forward_cached(model, &normalized, None)?.0)
        }
        ForwardMode::Train { dropout_seed } => {
            let masks = sample_masks(&model.config, inputs.rows(), dropout_seed);
            Ok(forward_cached(model, inputs, Some(&masks))?.0)
        }
    }
}

/// Forward pass over pre-normalized inputs with explicit masks (`None`
/// disables dropout). This is the pairing point for [`backward`].
pub fn forward_with_masks(
    model: &MlpModel,
    normalized: &Matrix,
    masks: Option<&DropoutMasks>,
) -> Result<Vec<f64>> {
    Ok(forward_cached(model, normalized, masks)?.0)
}

/// Mean squared error of a prediction vector.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::Shape("mse over empty vectors".into()));
    }
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "mse length mismatch: {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    let ss: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(ss / pred.len() as f64)
}

/// Gradients of the batch MSE, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

fn backward_from_cache(
    model: &MlpModel,
    cache: &ForwardCache,
    pred: &[f64],
    targets: &[f64],
    masks: Option<&DropoutMasks>,
) -> Result<Gradients> {
    if pred.len() != targets.len() {
        return Err(Error::Shape(format!(
            "backward length mismatch: {} predictions, {} targets",
            pred.len(),
            targets.len()
        )));
    }
    let n = pred.len();
    let layers = model.weights.len();
    let mut grads = Gradients::zeros_like(model);
    // dL/d(output) for the batch-mean MSE.
    let mut delta: Vec<Vec<f64>> = pred
        .iter()
        .zip(targets)
        .map(|(p, t)| vec![2.0 * (p - t) / n as f64])
        .collect();
    for l in (0..layers).rev() {
        let input = &cache.activations[l];
        let gw = &mut grads.weights[l];
        let gb = &mut grads.biases[l];
        for r in 0..n {
            let x = input.row(r);
            for (u, du) in delta[r].iter().enumerate() {
                gb[u] += du;
                let gwrow = gw.row_mut(u);
                for (gwi, xi) in gwrow.iter_mut().zip(x) {
                    *gwi += du * xi;
                }
            }
        }
        if l == 0 {
            break;
        }
        // Propagate through this layer's weights, then the previous hidden
        // layer's dropout mask and rectifier gate.
        let w = &model.weights[l];
        let prev_pre = &cache.pre[l - 1];
        let prev_dim = w.cols();
        let mut next_delta = vec![vec![0.0; prev_dim]; n];
        for r in 0..n {
            let nd = &mut next_delta[r];
            for (u, du) in delta[r].iter().enumerate() {
                let wrow = w.row(u);
                for (ndj, wj) in nd.iter_mut().zip(wrow) {
                    *ndj += du * wj;
                }
            }
            let zrow = prev_pre.row(r);
            for (j, ndj) in nd.iter_mut().enumerate() {
                if zrow[j] <= 0.0 {
                    *ndj = 0.0;
                } else if let Some(m) = masks {
                    *ndj *= m.hidden[l - 1].row(r)[j];
                }
            }
        }
        delta = next_delta;
    }
    Ok(grads)
}

/// Gradients of the batch MSE w.r.t. every weight and bias, using the same
/// masks as the paired forward pass (`None` for no dropout).
pub fn backward(
    model: &MlpModel,
    normalized: &Matrix,
    targets: &[f64],
    masks: Option<&DropoutMasks>,
) -> Result<Gradients> {
    let (pred, cache) = forward_cached(model, normalized, masks)?;
    backward_from_cache(model, &cache, &pred, targets, masks)
}

/// Single fused step used by the training loop: forward, loss, gradients.
pub(crate) fn loss_and_gradients(
    model: &MlpModel,
    normalized: &Matrix,
    targets: &[f64],
    masks: &DropoutMasks,
) -> Result<(f64, Gradients)> {
    let (pred, cache) = forward_cached(model, normalized, Some(masks))?;
    let loss = mse(&pred, targets)?;
    let grads = backward_from_cache(model, &cache, &pred, targets, Some(masks))?;
    Ok((loss, grads))
}

/// Outcome of sweeping a model's parameters with [`gradient_check`].
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// Largest relative disagreement among the compared parameters.
    pub max_rel_error: f64,
    /// Parameters whose finite difference was compared.
    pub checked: usize,
    /// Parameters excluded because the perturbation flipped a rectifier
    /// gate, putting a kink between the two evaluation points.
    pub skipped: usize,
}

/// Loss plus the open/closed state of every rectifier, used to detect
/// when a perturbation crosses a kink.
fn loss_and_gates(
    model: &MlpModel,
    normalized: &Matrix,
    targets: &[f64],
    masks: Option<&DropoutMasks>,
) -> Result<(f64, Vec<bool>)> {
    let (pred, cache) = forward_cached(model, normalized, masks)?;
    let loss = mse(&pred, targets)?;
    let hidden = cache.pre.len() - 1;
    let gates = cache.pre[..hidden]
        .iter()
        .flat_map(|z| z.as_slice().iter().map(|v| *v > 0.0))
        .collect();
    Ok((loss, gates))
}

/// Compares the analytic gradient of the batch MSE against a central
/// finite difference with step `epsilon`, parameter by parameter. The
/// loss is piecewise smooth: where a perturbation flips a rectifier gate
/// the two-sided difference straddles a kink and says nothing about the
/// derivative, so such parameters are counted as skipped instead of
/// compared. With `masks` given, the same dropout pattern applies to
/// every evaluation, keeping the comparison exact rather than stochastic.
/// Parameters whose analytic and numeric gradients are both below 1e-8
/// in magnitude count as checked with zero error.
pub fn gradient_check(
    model: &MlpModel,
    normalized: &Matrix,
    targets: &[f64],
    masks: Option<&DropoutMasks>,
    epsilon: f64,
) -> Result<GradCheckReport> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!(
            "finite-difference step must be finite and positive, got {epsilon}"
        )));
    }
    let analytic = backward(model, normalized, targets, masks)?;
    let mut probe = model.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, skipped: 0 };
    let mut compare = |an: f64, up: (f64, Vec<bool>), down: (f64, Vec<bool>)| {
        if up.1 != down.1 {
            report.skipped += 1;
            return;
        }
        let fd = (up.0 - down.0) / (2.0 * epsilon);
        let denom = an.abs().max(fd.abs());
        if denom > 1e-8 {
            report.max_rel_error = report.max_rel_error.max((an - fd).abs() / denom);
        }
        report.checked += 1;
    };
    for l in 0..model.weights.len() {
        for u in 0..model.weights[l].rows() {
            for i in 0..model.weights[l].cols() {
                let orig = probe.weights[l].row(u)[i];
                probe.weights[l].row_mut(u)[i] = orig + epsilon;
                let up = loss_and_gates(&probe, normalized, targets, masks)?;
                probe.weights[l].row_mut(u)[i] = orig - epsilon;
                let down = loss_and_gates(&probe, normalized, targets, masks)?;
                probe.weights[l].row_mut(u)[i] = orig;
                compare(analytic.weights[l].row(u)[i], up, down);
            }
        }
        for u in 0..model.biases[l].len() {
            let orig = probe.biases[l][u];
            probe.biases[l][u] = orig + epsilon;
            let up = loss_and_gates(&probe, normalized, targets, masks)?;
            probe.biases[l][u] = orig - epsilon;
            let down = loss_and_gates(&probe, normalized, targets, masks)?;
            probe.biases[l][u] = orig;
            compare(analytic.biases[l][u], up, down);
        }
    }
    Ok(report)
}
