//! Time-series feature pyramid: level 1 is the raw series and each deeper
//! level is the average-pooled previous level, per channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{pool, pooled_len, DenseArray, OpCounter, PoolConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PyramidConfig {
    pub stages: usize,
    pub pool: PoolConfig,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self {
            stages: 4,
            pool: PoolConfig::default(),
        }
    }
}

impl PyramidConfig {
    pub fn with_stages(stages: usize) -> Self {
        Self {
            stages,
            ..Self::default()
        }
    }
}

/// Lengths of all `cfg.stages` levels built from a series of length `base`.
pub fn level_lengths(base: usize, cfg: &PyramidConfig) -> Result<Vec<usize>> {
    if cfg.stages == 0 {
        return Err(Error::InvalidConfig("pyramid needs at least one stage".into()));
    }
    cfg.pool.validate()?;
    if base == 0 {
        return Err(Error::InvalidPyramid { base, level: 1 });
    }
    let mut lens = Vec::with_capacity(cfg.stages);
    lens.push(base);
    for level in 2..=cfg.stages {
        let prev = *lens.last().unwrap();
        let next = pooled_len(prev, cfg.pool).ok_or(Error::InvalidPyramid { base, level })?;
        lens.push(next);
    }
    Ok(lens)
}

/// Length of level `level` (1-based).
pub fn level_length(base: usize, cfg: &PyramidConfig, level: usize) -> Result<usize> {
    if level == 0 || level > cfg.stages {
        return Err(Error::InvalidConfig(format!(
            "level {level} outside 1..={}",
            cfg.stages
        )));
    }
    let sub = PyramidConfig {
        stages: level,
        ..*cfg
    };
    Ok(*level_lengths(base, &sub)?.last().unwrap())
}

/// Materialized pyramid of a `(len, channels)` block.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    /// Level `i` has shape `(len_i, channels)`; `levels[0]` is the input.
    pub levels: Vec<DenseArray>,
    pub base_len: usize,
}

impl Pyramid {
    pub fn lengths(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.shape()[0]).collect()
    }
}

pub fn build_pyramid(x: &DenseArray, cfg: &PyramidConfig) -> Result<Pyramid> {
    if x.shape().len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "pyramid input must be (len, channels), got {:?}",
            x.shape()
        )));
    }
    let (len, channels) = (x.shape()[0], x.shape()[1]);
    level_lengths(len, cfg)?;
    let rows = transpose(x);
    let levels = build_rows(&rows, cfg, &mut OpCounter::default())?
        .iter()
        .map(transpose)
        .collect::<Vec<_>>();
    debug_assert!(levels.iter().all(|l| l.shape()[1] == channels));
    Ok(Pyramid {
        levels,
        base_len: len,
    })
}

/// Pulls per-level cotangents (each `(len_i, channels)`) back to the input.
pub fn pyramid_backward(
    cfg: &PyramidConfig,
    base_len: usize,
    level_grads: &[DenseArray],
) -> Result<DenseArray> {
    let lens = level_lengths(base_len, cfg)?;
    if level_grads.len() != lens.len() {
        return Err(Error::LengthMismatch {
            what: "pyramid level gradients",
            expected: lens.len(),
            actual: level_grads.len(),
        });
    }
    let channels = level_grads[0].shape().get(1).copied().unwrap_or(0);
    for (g, len) in level_grads.iter().zip(&lens) {
        g.ensure_shape("pyramid level gradient", &[*len, channels])?;
    }
    let rows: Vec<DenseArray> = level_grads.iter().map(transpose).collect();
    Ok(transpose(&backward_rows(cfg, &rows)?))
}

/// Builds every level for a stack of row series `(rows, len)`.
pub(crate) fn build_rows(
    x: &DenseArray,
    cfg: &PyramidConfig,
    counter: &mut OpCounter,
) -> Result<Vec<DenseArray>> {
    let lens = level_lengths(x.cols(), cfg)?;
    let rows = x.rows();
    let mut levels = Vec::with_capacity(lens.len());
    levels.push(x.clone());
    for &len in &lens[1..] {
        let prev = levels.last().unwrap();
        let mut next = DenseArray::zeros(&[rows, len]);
        for r in 0..rows {
            pool::pool_into(prev.row(r), cfg.pool, next.row_mut(r), counter);
        }
        levels.push(next);
    }
    Ok(levels)
}

/// Input cotangent `(rows, len_1)` from per-level row cotangents.
pub(crate) fn backward_rows(cfg: &PyramidConfig, level_grads: &[DenseArray]) -> Result<DenseArray> {
    let deepest = level_grads
        .last()
        .ok_or_else(|| Error::InvalidConfig("no pyramid levels".into()))?;
    let rows = deepest.rows();
    let mut acc = deepest.clone();
    for g in level_grads[..level_grads.len() - 1].iter().rev() {
        g.ensure_shape("pyramid level gradient", &[rows, g.cols()])?;
        let mut up = g.clone();
        for r in 0..rows {
            pool::pool_backward_into(cfg.pool, acc.row(r), up.row_mut(r));
        }
        acc = up;
    }
    Ok(acc)
}

fn transpose(a: &DenseArray) -> DenseArray {
    let (r, c) = (a.rows(), a.cols());
    let mut out = DenseArray::zeros(&[c, r]);
    for i in 0..r {
        for j in 0..c {
            out.data_mut()[j * r + i] = a.data()[i * c + j];
        }
    }
    out
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}
