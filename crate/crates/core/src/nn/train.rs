//! Minibatch training with early stopping on a held-out validation set.
//!
//! The loop owns input normalization: it fits the normalizer on the
//! training rows only, feeds pre-normalized batches through the network,
//! and stores the fitted normalizer on the returned model so inference can
//! accept raw features. Three independent random streams are derived from
//! the one training seed — initialization, per-epoch shuffling, and
//! per-batch dropout — so histories are bitwise reproducible.

use super::{
    adam_step, forward_with_masks, init_model, loss_and_gradients, mse, sample_masks, AdamState,
    MlpConfig, MlpModel,
};
use crate::dataset::fit_normalizer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeds::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    /// Share of a scenario's data given to training when the caller splits;
    /// carried here so one config describes the whole procedure.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 8192,
            learning_rate: 0.001,
            patience: 50,
            max_epochs: 1000,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config(
                "batch size, max epochs, and patience must be positive".into(),
            ));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} must be smaller than max epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Per-epoch loss curves plus where early stopping landed. `best_epoch`
/// indexes the recorded curves (zero-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

fn gather_rows(m: &Matrix, indices: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(indices.len(), m.cols());
    for (r, &src) in indices.iter().enumerate() {
        out.row_mut(r).copy_from_slice(m.row(src));
    }
    out
}

/// Trains a fresh model on raw (unnormalized) feature rows. The validation
/// set steers early stopping only; the weights returned are the snapshot
/// from the best validation epoch, not the last one.
pub fn train(
    train_inputs: &Matrix,
    train_targets: &[f64],
    val_inputs: &Matrix,
    val_targets: &[f64],
    mlp_config: &MlpConfig,
    train_config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    mlp_config.validate()?;
    train_config.validate()?;
    if train_inputs.rows() == 0 || val_inputs.rows() == 0 {
        return Err(Error::Degenerate(
            "training and validation sets must both be non-empty".into(),
        ));
    }
    if train_inputs.rows() != train_targets.len() || val_inputs.rows() != val_targets.len() {
        return Err(Error::Shape(format!(
            "target counts ({}, {}) do not match input rows ({}, {})",
            train_targets.len(),
            val_targets.len(),
            train_inputs.rows(),
            val_inputs.rows()
        )));
    }
    if train_inputs.cols() != mlp_config.input_dim || val_inputs.cols() != mlp_config.input_dim {
        return Err(Error::Shape(format!(
            "inputs have {} columns, network expects {}",
            train_inputs.cols(),
            mlp_config.input_dim
        )));
    }

    // Normalization statistics come from the training rows alone.
    let normalizer = fit_normalizer(train_inputs)?;
    let mut train_norm = train_inputs.clone();
    normalizer.apply_in_place(&mut train_norm)?;
    let mut val_norm = val_inputs.clone();
    normalizer.apply_in_place(&mut val_norm)?;

    let seed = train_config.seed;
    let mut model = init_model(mlp_config, derive_seed(seed, "init", 0))?;
    model.normalizer = normalizer;
    let mut adam = AdamState::new(&model);

    let n = train_norm.rows();
    let mut history = TrainHistory {
        train_mse: Vec::new(),
        val_mse: Vec::new(),
        best_epoch: 0,
        epochs_run: 0,
    };
    let mut best_val = f64::INFINITY;
    let mut best_params: Option<(Vec<Matrix>, Vec<Vec<f64>>)> = None;
    let mut since_improvement = 0usize;
    let mut step = 0u64;

    for epoch in 0..train_config.max_epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, "shuffle", epoch as u64));
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }

        let mut sse = 0.0;
        for chunk in order.chunks(train_config.batch_size) {
            let batch_x = gather_rows(&train_norm, chunk);
            let batch_y: Vec<f64> = chunk.iter().map(|&i| train_targets[i]).collect();
            let masks = sample_masks(mlp_config, chunk.len(), derive_seed(seed, "dropout", step));
            step += 1;
            let (loss, grads) = loss_and_gradients(&model, &batch_x, &batch_y, &masks)?;
            sse += loss * chunk.len() as f64;
            adam_step(&mut model, &mut adam, &grads, train_config.learning_rate)?;
        }
        history.train_mse.push(sse / n as f64);

        let val_pred = forward_with_masks(&model, &val_norm, None)?;
        let val = mse(&val_pred, val_targets)?;
        history.val_mse.push(val);
        history.epochs_run = epoch + 1;

        if val < best_val {
            best_val = val;
            history.best_epoch = epoch;
            best_params = Some((model.weights.clone(), model.biases.clone()));
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= train_config.patience {
                break;
            }
        }
    }

    let (weights, biases) = best_params.expect("at least one epoch ran");
    model.weights = weights;
    model.biases = biases;
    Ok((model, history))
}
