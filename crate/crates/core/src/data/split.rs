use std::ops::Range;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Train,
    Val,
    Test,
}

/// Chronological train/val/test row ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
    pub lookback: usize,
}

impl SplitSpec {
    pub fn range(&self, part: Part) -> Range<usize> {
        match part {
            Part::Train => self.train.clone(),
            Part::Val => self.val.clone(),
            Part::Test => self.test.clone(),
        }
    }

    /// Rows windows may read for `part`. Validation and test ranges reach
    /// back `lookback` rows so their first target starts at the split border.
    pub fn window_range(&self, part: Part) -> Range<usize> {
        let r = self.range(part);
        match part {
            Part::Train => r,
            Part::Val | Part::Test => r.start.saturating_sub(self.lookback)..r.end,
        }
    }
}

/// ETTh*: 8640/2880/2880 rows; ETTm*: 34560/11520/11520; everything else
/// 70%/10%/20% with the remainder going to validation.
pub fn standard_split(name: &str, rows: usize, lookback: usize, horizon: usize) -> Result<SplitSpec> {
    if rows < lookback + horizon {
        return Err(Error::TooShort {
            rows,
            needed: lookback + horizon,
        });
    }
    let lower = name.to_ascii_lowercase();
    let (train, val, test) = if lower.starts_with("etth") {
        let m = 30 * 24;
        (0..12 * m, 12 * m..16 * m, 16 * m..20 * m)
    } else if lower.starts_with("ettm") {
        let m = 30 * 24 * 4;
        (0..12 * m, 12 * m..16 * m, 16 * m..20 * m)
    } else {
        let n_train = rows * 7 / 10;
        let n_test = rows * 2 / 10;
        let n_val = rows - n_train - n_test;
        (0..n_train, n_train..n_train + n_val, rows - n_test..rows)
    };
    if test.end > rows {
        return Err(Error::TooShort {
            rows,
            needed: test.end,
        });
    }
    let split = SplitSpec {
        train,
        val,
        test,
        lookback,
    };
    for part in [Part::Train, Part::Val, Part::Test] {
        if split.window_range(part).len() < lookback + horizon {
            return Err(Error::InvalidConfig(format!(
                "{part:?} split of {name} has no complete window for lookback {lookback} + horizon {horizon}"
            )));
        }
    }
    Ok(split)
}
