//! Deterministic mini-batch trainer: shuffled batches, batch-mean MSE, Adam,
//! per-epoch learning-rate decay and early stopping on validation MSE.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::WindowSampler;
use crate::error::{Error, Result};
use crate::evaluation::evaluate;
use crate::models::{backward, forward, init_model, Gradients, ModelSpec, ModelState};
use crate::numeric::{AdamConfig, AdamState, DenseArray};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub lr: f64,
    /// Multiplier applied once per epoch after `decay_after` epochs.
    pub lr_decay: f64,
    pub decay_after: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 30,
            patience: 3,
            lr: 1e-3,
            lr_decay: 0.5,
            decay_after: 3,
            seed: 2021,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and max_epochs must be >= 1".into(),
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) || !(self.lr_decay.is_finite() && self.lr_decay > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lr ({}) and lr_decay ({}) must be positive",
                self.lr, self.lr_decay
            )));
        }
        Ok(())
    }

    /// Learning rate used during 1-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let decays = epoch.saturating_sub(self.decay_after);
        self.lr * self.lr_decay.powi(decays as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mse: f64,
    pub val_mae: f64,
    pub lr: f64,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch with the lowest validation MSE (earliest on ties).
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }

    /// Fraction of consecutive epochs whose train loss did not increase.
    pub fn non_increasing_fraction(&self) -> f64 {
        let pairs = self.epochs.windows(2);
        let n = pairs.len();
        if n == 0 {
            return 1.0;
        }
        let ok = self
            .epochs
            .windows(2)
            .filter(|w| w[1].train_loss <= w[0].train_loss)
            .count();
        ok as f64 / n as f64
    }

    /// True when everything except wall-clock timings matches.
    pub fn same_trajectory(&self, other: &TrainLog) -> bool {
        self.best_epoch == other.best_epoch
            && self.epochs.len() == other.epochs.len()
            && self.epochs.iter().zip(&other.epochs).all(|(a, b)| {
                a.epoch == b.epoch
                    && a.train_loss.to_bits() == b.train_loss.to_bits()
                    && a.val_mse.to_bits() == b.val_mse.to_bits()
                    && a.val_mae.to_bits() == b.val_mae.to_bits()
                    && a.lr.to_bits() == b.lr.to_bits()
            })
    }

    /// One row per epoch followed by a `best` summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_mse,val_mae,lr,wall_clock_s\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{:.8},{:.8},{:.8},{:.6e},{:.3}",
                e.epoch, e.train_loss, e.val_mse, e.val_mae, e.lr, e.wall_clock_s
            );
        }
        if !self.epochs.is_empty() {
            let b = self.best();
            let total: f64 = self.epochs.iter().map(|e| e.wall_clock_s).sum();
            let _ = writeln!(
                out,
                "best={},{:.8},{:.8},{:.8},{:.6e},{:.3}",
                self.best_epoch, b.train_loss, b.val_mse, b.val_mae, b.lr, total
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Batch-mean MSE and its exact gradients.
pub fn loss_batch(state: &ModelState, inputs: &DenseArray, targets: &DenseArray) -> Result<(f64, Gradients)> {
    let (pred, cache) = forward(state, inputs)?;
    targets.ensure_shape("batch targets", pred.shape())?;
    let count = pred.len().max(1) as f64;
    let mut grad = pred.clone();
    let mut loss = 0.0;
    for (g, t) in grad.data_mut().iter_mut().zip(targets.data()) {
        let d = *g - t;
        loss += d * d;
        *g = 2.0 * d / count;
    }
    let grads = backward(state, &cache, &grad)?;
    Ok((loss / count, grads))
}

/// Trains a freshly initialized model and returns the parameters of the best
/// validation epoch together with the epoch log.
///
/// `cfg.seed` fixes both initialization and batch order, so two calls with
/// equal arguments produce bitwise identical weights and logs.
pub fn train(
    spec: &ModelSpec,
    train_windows: &WindowSampler<'_>,
    val_windows: &WindowSampler<'_>,
    cfg: &TrainConfig,
) -> Result<(ModelState, TrainLog)> {
    let state = init_model(spec, cfg.seed)?;
    train_from(state, train_windows, val_windows, cfg)
}

/// [`train`] starting from an existing state.
pub fn train_from(
    mut state: ModelState,
    train_windows: &WindowSampler<'_>,
    val_windows: &WindowSampler<'_>,
    cfg: &TrainConfig,
) -> Result<(ModelState, TrainLog)> {
    cfg.validate()?;
    if train_windows.is_empty() || val_windows.is_empty() {
        return Err(Error::EmptyWindows);
    }
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        state.param_shapes(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..train_windows.len()).collect();
    let mut best = state.clone();
    let mut log = TrainLog {
        epochs: Vec::new(),
        best_epoch: 0,
    };
    let mut best_mse = f64::INFINITY;
    let mut stale = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let lr = cfg.lr_at(epoch);
        adam.set_lr(lr);
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let (mut total, mut seen) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (x, y) = train_windows.batch(chunk);
            let (loss, grads) = loss_batch(&state, &x, &y)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    last_good: Box::new(best),
                });
            }
            adam.step(&mut state.params_mut(), &grads.arrays())?;
            total += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let val = evaluate(&state, val_windows, cfg.batch_size)?;
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: total / seen as f64,
            val_mse: val.mse,
            val_mae: val.mae,
            lr,
            wall_clock_s: started.elapsed().as_secs_f64(),
        });
        log::debug!(
            "epoch {epoch}: train {:.6} val mse {:.6} mae {:.6}",
            total / seen as f64,
            val.mse,
            val.mae
        );
        if val.mse < best_mse {
            best_mse = val.mse;
            best = state.clone();
            log.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience.max(1) {
                break;
            }
        }
    }
    if log.best_epoch == 0 {
        // Every validation MSE was NaN.
        return Err(Error::Diverged {
            epoch: log.epochs.len(),
            batch: 0,
            last_good: Box::new(best),
        });
    }
    Ok((best, log))
}
