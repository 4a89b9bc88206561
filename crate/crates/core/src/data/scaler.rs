use std::ops::Range;

use crate::error::{Error, Result};
use crate::numeric::DenseArray;

/// Per-channel z-score statistics fitted on the training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Population mean/std of each column over `rows`.
    pub fn fit(values: &DenseArray, rows: Range<usize>, names: &[String]) -> Result<Self> {
        let c = values.cols();
        if rows.is_empty() || rows.end > values.rows() {
            return Err(Error::InvalidConfig(format!(
                "scaler rows {rows:?} outside 0..{}",
                values.rows()
            )));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; c];
        for r in rows.clone() {
            for (m, v) in mean.iter_mut().zip(values.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; c];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(values.row(r)).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
        for (j, s) in std.iter().enumerate() {
            // Relative threshold: a constant channel leaves only rounding noise.
            if *s <= 1e-12 * mean[j].abs().max(1.0) {
                let name = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
                return Err(Error::ZeroVariance(name));
            }
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, values: &DenseArray) -> Result<DenseArray> {
        self.map(values, |v, m, s| (v - m) / s)
    }

    pub fn inverse_transform(&self, values: &DenseArray) -> Result<DenseArray> {
        self.map(values, |v, m, s| v * s + m)
    }

    fn map(&self, values: &DenseArray, f: impl Fn(f64, f64, f64) -> f64) -> Result<DenseArray> {
        if values.shape().len() != 2 || values.cols() != self.mean.len() {
            return Err(Error::ShapeMismatch {
                what: "scaler input",
                expected: vec![values.shape().first().copied().unwrap_or(0), self.mean.len()],
                actual: values.shape().to_vec(),
            });
        }
        let mut out = values.clone();
        let c = self.mean.len();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            let j = i % c;
            *v = f(*v, self.mean[j], self.std[j]);
        }
        Ok(out)
    }
}
