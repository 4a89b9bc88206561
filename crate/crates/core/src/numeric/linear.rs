use rand::Rng;

use super::{DenseArray, OpCounter};
use crate::error::{Error, Result};

/// Fully connected map `out = weight · input + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    in_len: usize,
    out_len: usize,
    weight: DenseArray,
    bias: DenseArray,
}

/// Cotangents of one [`LinearLayer`]'s weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub weight: DenseArray,
    pub bias: DenseArray,
}

impl LinearGrads {
    pub fn zeros(in_len: usize, out_len: usize) -> Self {
        Self {
            weight: DenseArray::zeros(&[out_len, in_len]),
            bias: DenseArray::zeros(&[out_len]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weight.is_finite() && self.bias.is_finite()
    }
}

impl LinearLayer {
    pub fn new(weight: DenseArray, bias: DenseArray) -> Result<Self> {
        if weight.shape().len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "linear weight must be 2-D, got shape {:?}",
                weight.shape()
            )));
        }
        let (out_len, in_len) = (weight.shape()[0], weight.shape()[1]);
        if in_len == 0 || out_len == 0 {
            return Err(Error::InvalidConfig("linear layer with an empty side".into()));
        }
        bias.ensure_shape("linear bias", &[out_len])?;
        Ok(Self {
            in_len,
            out_len,
            weight,
            bias,
        })
    }

    pub fn zeros(in_len: usize, out_len: usize) -> Self {
        Self {
            in_len,
            out_len,
            weight: DenseArray::zeros(&[out_len, in_len]),
            bias: DenseArray::zeros(&[out_len]),
        }
    }

    /// Fan-in uniform init in `(-1/sqrt(in_len), 1/sqrt(in_len))` with zero bias.
    pub fn init_uniform<R: Rng>(in_len: usize, out_len: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_len as f64).sqrt();
        let mut layer = Self::zeros(in_len, out_len);
        for w in layer.weight.data_mut() {
            *w = rng.gen_range(-bound..bound);
        }
        layer
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    pub fn weight(&self) -> &DenseArray {
        &self.weight
    }

    pub fn bias(&self) -> &DenseArray {
        &self.bias
    }

    pub fn weight_mut(&mut self) -> &mut DenseArray {
        &mut self.weight
    }

    pub fn bias_mut(&mut self) -> &mut DenseArray {
        &mut self.bias
    }

    pub fn parts_mut(&mut self) -> (&mut DenseArray, &mut DenseArray) {
        (&mut self.weight, &mut self.bias)
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.out_len];
        self.forward_rows(input, 1, &mut out, &mut OpCounter::default())?;
        Ok(out)
    }

    pub fn backward(&self, input: &[f64], out_grad: &[f64]) -> Result<(LinearGrads, Vec<f64>)> {
        let mut grads = LinearGrads::zeros(self.in_len, self.out_len);
        let mut in_grad = vec![0.0; self.in_len];
        self.backward_rows(input, 1, out_grad, &mut grads, Some(&mut in_grad))?;
        Ok((grads, in_grad))
    }

    /// Applies the layer to `rows` stacked inputs (row-major `rows x in_len`).
    pub fn forward_rows(
        &self,
        input: &[f64],
        rows: usize,
        out: &mut [f64],
        counter: &mut OpCounter,
    ) -> Result<()> {
        self.check_rows("linear input", input, rows, self.in_len)?;
        self.check_rows("linear output", out, rows, self.out_len)?;
        let w = self.weight.data();
        let b = self.bias.data();
        for (x, y) in input
            .chunks_exact(self.in_len)
            .zip(out.chunks_exact_mut(self.out_len))
        {
            for (j, (yj, wj)) in y.iter_mut().zip(w.chunks_exact(self.in_len)).enumerate() {
                let dot: f64 = wj.iter().zip(x).map(|(a, b)| a * b).sum();
                *yj = dot + b[j];
                counter.macs += self.in_len as u64;
                counter.adds += 1;
            }
        }
        Ok(())
    }

    /// Accumulates weight/bias cotangents into `grads` over `rows` samples and,
    /// when requested, writes the input cotangent.
    pub fn backward_rows(
        &self,
        input: &[f64],
        rows: usize,
        out_grad: &[f64],
        grads: &mut LinearGrads,
        in_grad: Option<&mut [f64]>,
    ) -> Result<()> {
        self.check_rows("linear input", input, rows, self.in_len)?;
        self.check_rows("linear output gradient", out_grad, rows, self.out_len)?;
        grads
            .weight
            .ensure_shape("linear weight gradient", &[self.out_len, self.in_len])?;
        grads.bias.ensure_shape("linear bias gradient", &[self.out_len])?;

        let gw = grads.weight.data_mut();
        for (x, dy) in input
            .chunks_exact(self.in_len)
            .zip(out_grad.chunks_exact(self.out_len))
        {
            for (g, row) in dy.iter().zip(gw.chunks_exact_mut(self.in_len)) {
                if *g == 0.0 {
                    continue;
                }
                for (acc, xi) in row.iter_mut().zip(x) {
                    *acc += g * xi;
                }
            }
        }
        let gb = grads.bias.data_mut();
        for dy in out_grad.chunks_exact(self.out_len) {
            for (acc, g) in gb.iter_mut().zip(dy) {
                *acc += g;
            }
        }

        if let Some(dx) = in_grad {
            self.check_rows("linear input gradient", dx, rows, self.in_len)?;
            dx.iter_mut().for_each(|v| *v = 0.0);
            let w = self.weight.data();
            for (dxr, dy) in dx
                .chunks_exact_mut(self.in_len)
                .zip(out_grad.chunks_exact(self.out_len))
            {
                for (g, wj) in dy.iter().zip(w.chunks_exact(self.in_len)) {
                    if *g == 0.0 {
                        continue;
                    }
                    for (acc, wji) in dxr.iter_mut().zip(wj) {
                        *acc += g * wji;
                    }
                }
            }
        }
        Ok(())
    }

    fn check_rows(&self, what: &'static str, buf: &[f64], rows: usize, width: usize) -> Result<()> {
        if buf.len() != rows * width {
            return Err(Error::LengthMismatch {
                what,
                expected: rows * width,
                actual: buf.len(),
            });
        }
        Ok(())
    }
}
