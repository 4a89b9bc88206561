use serde::{Deserialize, Serialize};

use super::OpCounter;
use crate::error::{Error, Result};

/// Average-pooling window. Padding, when non-zero, pads with zeros and the
/// zeros count towards the window mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            kernel: 3,
            stride: 2,
            padding: 0,
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel == 0 || self.stride == 0 {
            return Err(Error::InvalidConfig(format!(
                "pool kernel and stride must be >= 1, got kernel {} stride {}",
                self.kernel, self.stride
            )));
        }
        Ok(())
    }
}

/// Output length `floor((n + 2p - k) / s + 1)`, or `None` when `n` cannot
/// produce a single window.
pub fn pooled_len(n: usize, cfg: PoolConfig) -> Option<usize> {
    let padded = n + 2 * cfg.padding;
    if cfg.kernel == 0 || cfg.stride == 0 || padded < cfg.kernel {
        return None;
    }
    Some((padded - cfg.kernel) / cfg.stride + 1)
}

pub fn avg_pool_1d(input: &[f64], cfg: PoolConfig) -> Result<Vec<f64>> {
    let m = out_len(input.len(), cfg)?;
    let mut out = vec![0.0; m];
    pool_into(input, cfg, &mut out, &mut OpCounter::default());
    Ok(out)
}

pub fn avg_pool_1d_backward(cfg: PoolConfig, n: usize, out_grad: &[f64]) -> Result<Vec<f64>> {
    let m = out_len(n, cfg)?;
    if out_grad.len() != m {
        return Err(Error::LengthMismatch {
            what: "pooling output gradient",
            expected: m,
            actual: out_grad.len(),
        });
    }
    let mut in_grad = vec![0.0; n];
    pool_backward_into(cfg, out_grad, &mut in_grad);
    Ok(in_grad)
}

fn out_len(n: usize, cfg: PoolConfig) -> Result<usize> {
    cfg.validate()?;
    pooled_len(n, cfg).ok_or(Error::SeriesTooShort {
        len: n,
        kernel: cfg.kernel,
        padding: cfg.padding,
    })
}

/// Pools `input` into `out`; `out.len()` must equal `pooled_len(input.len())`.
pub(crate) fn pool_into(input: &[f64], cfg: PoolConfig, out: &mut [f64], counter: &mut OpCounter) {
    let n = input.len() as isize;
    let pad = cfg.padding as isize;
    let k = cfg.kernel as f64;
    for (j, o) in out.iter_mut().enumerate() {
        let start = (j * cfg.stride) as isize - pad;
        let mut acc = 0.0;
        for p in start..start + cfg.kernel as isize {
            if (0..n).contains(&p) {
                acc += input[p as usize];
            }
        }
        *o = acc / k;
        counter.adds += cfg.kernel as u64 - 1;
    }
}

/// Accumulates the pooling cotangent into `in_grad` (not cleared first).
pub(crate) fn pool_backward_into(cfg: PoolConfig, out_grad: &[f64], in_grad: &mut [f64]) {
    let n = in_grad.len() as isize;
    let pad = cfg.padding as isize;
    let k = cfg.kernel as f64;
    for (j, g) in out_grad.iter().enumerate() {
        let share = g / k;
        let start = (j * cfg.stride) as isize - pad;
        for p in start..start + cfg.kernel as isize {
            if (0..n).contains(&p) {
                in_grad[p as usize] += share;
            }
        }
    }
}
