use std::ops::Range;

use super::{standard_split, Part, RawDataset, Scaler, SplitSpec};
use crate::error::{Error, Result};
use crate::numeric::DenseArray;

/// One sample: look-back block `(L, C)` and target block `(T, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesWindow {
    pub input: DenseArray,
    pub target: DenseArray,
}

/// Stride-1 sliding windows over a row range of a `(rows, C)` matrix.
/// Every window, look-back and target, lies inside `range`.
#[derive(Debug, Clone)]
pub struct WindowSampler<'a> {
    values: &'a DenseArray,
    lookback: usize,
    horizon: usize,
    starts: Vec<usize>,
}

impl<'a> WindowSampler<'a> {
    pub fn new(values: &'a DenseArray, range: Range<usize>, lookback: usize, horizon: usize) -> Result<Self> {
        if range.end > values.rows() {
            return Err(Error::InvalidConfig(format!(
                "window range {range:?} exceeds {} rows",
                values.rows()
            )));
        }
        let span = lookback + horizon;
        let count = (range.len() + 1).saturating_sub(span);
        Ok(Self {
            values,
            lookback,
            horizon,
            starts: (range.start..range.start + count).collect(),
        })
    }

    /// Keeps every `step`-th window (smoke runs).
    pub fn every(mut self, step: usize) -> Self {
        let step = step.max(1);
        self.starts = self.starts.into_iter().step_by(step).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn channels(&self) -> usize {
        self.values.cols()
    }

    /// First row of window `i`.
    pub fn start(&self, i: usize) -> usize {
        self.starts[i]
    }

    pub fn window(&self, i: usize) -> SeriesWindow {
        let (x, y) = self.batch(&[i]);
        let c = self.channels();
        SeriesWindow {
            input: x.reshape(vec![self.lookback, c]).unwrap(),
            target: y.reshape(vec![self.horizon, c]).unwrap(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = SeriesWindow> + '_ {
        (0..self.len()).map(|i| self.window(i))
    }

    /// Stacks windows `indices` into `(B, L, C)` inputs and `(B, T, C)` targets.
    pub fn batch(&self, indices: &[usize]) -> (DenseArray, DenseArray) {
        let c = self.channels();
        let (l, t) = (self.lookback, self.horizon);
        let mut x = Vec::with_capacity(indices.len() * l * c);
        let mut y = Vec::with_capacity(indices.len() * t * c);
        let data = self.values.data();
        for &i in indices {
            let s = self.starts[i];
            x.extend_from_slice(&data[s * c..(s + l) * c]);
            y.extend_from_slice(&data[(s + l) * c..(s + l + t) * c]);
        }
        (
            DenseArray::new(vec![indices.len(), l, c], x).unwrap(),
            DenseArray::new(vec![indices.len(), t, c], y).unwrap(),
        )
    }
}

/// A dataset after splitting, optional target selection and standardization.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub name: String,
    pub columns: Vec<String>,
    pub split: SplitSpec,
    pub scaler: Scaler,
    /// Standardized `(rows, C)` values.
    pub values: DenseArray,
    pub lookback: usize,
    pub horizon: usize,
    window_step: usize,
}

impl Prepared {
    /// `target`, when given, selects a single channel (univariate task).
    pub fn new(raw: &RawDataset, lookback: usize, horizon: usize, target: Option<&str>) -> Result<Self> {
        let columns = match target {
            Some(name) => vec![raw.column_index(name).ok_or_else(|| {
                Error::InvalidConfig(format!("{} has no column `{name}`", raw.name))
            })?],
            None => (0..raw.channels()).collect(),
        };
        Self::with_columns(raw, lookback, horizon, &columns)
    }

    /// Keeps the raw columns at `indices`, in that order.
    pub fn with_columns(raw: &RawDataset, lookback: usize, horizon: usize, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() || indices.iter().any(|&j| j >= raw.channels()) {
            return Err(Error::InvalidConfig(format!(
                "column selection {indices:?} is invalid for {} channels",
                raw.channels()
            )));
        }
        let split = standard_split(&raw.name, raw.rows(), lookback, horizon)?;
        let columns: Vec<String> = indices.iter().map(|&j| raw.columns[j].clone()).collect();
        let values = if indices.len() == raw.channels() && indices.iter().enumerate().all(|(i, &j)| i == j) {
            raw.values.clone()
        } else {
            select_columns(&raw.values, indices)
        };
        let scaler = Scaler::fit(&values, split.train.clone(), &columns)?;
        let values = scaler.transform(&values)?;
        Ok(Self {
            name: raw.name.clone(),
            columns,
            split,
            scaler,
            values,
            lookback,
            horizon,
            window_step: 1,
        })
    }

    pub fn channels(&self) -> usize {
        self.values.cols()
    }

    /// Keeps the first `n` channels only.
    pub fn truncate_channels(&mut self, n: usize) {
        let n = n.clamp(1, self.channels());
        if n == self.channels() {
            return;
        }
        let idx: Vec<usize> = (0..n).collect();
        self.values = select_columns(&self.values, &idx);
        self.columns.truncate(n);
        self.scaler.mean.truncate(n);
        self.scaler.std.truncate(n);
    }

    /// Windows of every split keep only every `step`-th window.
    pub fn set_window_step(&mut self, step: usize) {
        self.window_step = step.max(1);
    }

    pub fn windows(&self, part: Part) -> WindowSampler<'_> {
        WindowSampler::new(&self.values, self.split.window_range(part), self.lookback, self.horizon)
            .expect("split ranges lie inside the dataset")
            .every(self.window_step)
    }
}

fn select_columns(values: &DenseArray, idx: &[usize]) -> DenseArray {
    let mut out = Vec::with_capacity(values.rows() * idx.len());
    for r in 0..values.rows() {
        let row = values.row(r);
        out.extend(idx.iter().map(|&j| row[j]));
    }
    DenseArray::new(vec![values.rows(), idx.len()], out).unwrap()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn ramp(rows: usize, c: usize) -> DenseArray {
        DenseArray::new(vec![rows, c], (0..rows * c).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn ten_rows_give_six_windows() {
        let v = ramp(10, 1);
        let w = WindowSampler::new(&v, 0..10, 3, 2).unwrap();
        assert_eq!(w.len(), 6);
        let first = w.window(0);
        assert_eq!(first.input.data(), &[0.0, 1.0, 2.0]);
        assert_eq!(first.target.data(), &[3.0, 4.0]);
    }

    #[test]
    fn consecutive_windows_overlap_by_lookback_minus_one() {
        let v = ramp(20, 2);
        let w = WindowSampler::new(&v, 0..20, 5, 3).unwrap();
        let (a, b) = (w.window(4), w.window(5));
        assert_eq!(&a.input.data()[2..], &b.input.data()[..8]);
    }

    #[test]
    fn batch_layout_is_sample_time_channel() {
        let v = ramp(8, 2);
        let w = WindowSampler::new(&v, 0..8, 2, 1).unwrap();
        let (x, y) = w.batch(&[0, 3]);
        assert_eq!(x.shape(), &[2, 2, 2]);
        assert_eq!(x.data(), &[0.0, 1.0, 2.0, 3.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(y.data(), &[4.0, 5.0, 10.0, 11.0]);
    }

    #[test]
    fn subsampling_keeps_every_kth_window() {
        let v = ramp(100, 1);
        let w = WindowSampler::new(&v, 0..100, 10, 5).unwrap().every(10);
        assert_eq!(w.len(), 9);
        assert_eq!(w.start(1), 10);
    }

    proptest! {
        #[test]
        fn count_law_and_containment(start in 0usize..50, len in 0usize..200, l in 1usize..40, t in 1usize..40) {
            let v = ramp(300, 1);
            let range = start..start + len;
            let w = WindowSampler::new(&v, range.clone(), l, t).unwrap();
            prop_assert_eq!(w.len(), (len + 1).saturating_sub(l + t));
            for i in 0..w.len() {
                prop_assert!(w.start(i) >= range.start);
                prop_assert!(w.start(i) + l + t <= range.end);
            }
        }
    }
}
