//! One benchmark cell end to end: load, split, standardize, train per seed,
//! evaluate on the test split.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{default_lookback, Catalog, Part, Prepared, RawDataset};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, BenchRow, Metrics};
use crate::models::{ModelSpec, ModelState, Variant};
use crate::pyramid::PyramidConfig;
use crate::training::{train, TrainConfig, TrainLog};

/// Channel forecast in univariate mode: `OT` when present, else the last column.
pub fn univariate_target(raw: &RawDataset) -> Result<&str> {
    if raw.column_index("OT").is_some() {
        return Ok("OT");
    }
    raw.columns
        .last()
        .map(String::as_str)
        .ok_or_else(|| Error::InvalidConfig(format!("{} has no value columns", raw.name)))
}

/// Reduced-cost run: keeps every `ceil(1/fraction)`-th window, the first
/// `ceil(fraction * C)` channels and a single epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoke {
    pub fraction: f64,
}

impl Smoke {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "smoke fraction must lie in (0, 1], got {fraction}"
            )));
        }
        Ok(Self { fraction })
    }

    pub fn window_step(&self) -> usize {
        (1.0 / self.fraction).ceil() as usize
    }

    pub fn channels(&self, full: usize) -> usize {
        ((self.fraction * full as f64).ceil() as usize).clamp(1, full.max(1))
    }
}

/// Where a cell's data comes from and how it is shaped.
#[derive(Debug, Clone, PartialEq)]
pub struct CellData {
    pub dataset: String,
    pub lookback: Option<usize>,
    pub horizon: usize,
    pub univariate: bool,
    pub smoke: Option<Smoke>,
}

impl CellData {
    pub fn lookback(&self) -> usize {
        self.lookback.unwrap_or_else(|| default_lookback(&self.dataset))
    }

    pub fn load(&self, catalog: &Catalog) -> Result<Prepared> {
        let raw = catalog.load(&self.dataset)?;
        self.prepare(&raw)
    }

    pub fn prepare(&self, raw: &RawDataset) -> Result<Prepared> {
        let columns: Vec<usize> = if self.univariate {
            let target = univariate_target(raw)?;
            vec![raw.column_index(target).expect("target comes from the header")]
        } else {
            let keep = self.smoke.map_or(raw.channels(), |s| s.channels(raw.channels()));
            (0..keep).collect()
        };
        let mut prepared = Prepared::with_columns(raw, self.lookback(), self.horizon, &columns)?;
        if let Some(smoke) = self.smoke {
            prepared.set_window_step(smoke.window_step());
        }
        Ok(prepared)
    }
}

/// Model options shared by every cell of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub pyramid: PyramidConfig,
    pub ma_kernel: usize,
    pub channel_individual: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        let spec = ModelSpec::new(Variant::Linear, 1, 1, 1);
        Self {
            pyramid: spec.pyramid,
            ma_kernel: spec.ma_kernel,
            channel_individual: spec.channel_individual,
        }
    }
}

impl ModelOptions {
    pub fn spec(&self, variant: Variant, prepared: &Prepared) -> ModelSpec {
        ModelSpec {
            variant,
            lookback: prepared.lookback,
            horizon: prepared.horizon,
            channels: prepared.channels(),
            pyramid: self.pyramid,
            ma_kernel: self.ma_kernel,
            channel_individual: self.channel_individual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub val: Metrics,
    pub test: Metrics,
    pub log: TrainLog,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: BenchRow,
    pub seeds: Vec<SeedOutcome>,
    /// State of the seed with the lowest validation MSE.
    pub best_state: ModelState,
}

impl CellOutcome {
    /// Seed result with the lowest test MSE.
    pub fn best_test(&self) -> &SeedOutcome {
        self.seeds
            .iter()
            .min_by(|a, b| a.test.mse.total_cmp(&b.test.mse))
            .expect("at least one seed ran")
    }
}

fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

/// Trains `variant` once per seed and reports the test metrics, averaged
/// across seeds when more than one is given.
pub fn run_cell(
    prepared: &Prepared,
    variant: Variant,
    options: &ModelOptions,
    cfg: &TrainConfig,
    seeds: &[u64],
    smoke: Option<Smoke>,
) -> Result<CellOutcome> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let started = Instant::now();
    let spec = options.spec(variant, prepared);
    let (train_w, val_w, test_w) = (
        prepared.windows(Part::Train),
        prepared.windows(Part::Val),
        prepared.windows(Part::Test),
    );
    let mut outcomes = Vec::with_capacity(seeds.len());
    let mut best: Option<(f64, ModelState)> = None;
    for &seed in seeds {
        let mut cfg = TrainConfig { seed, ..*cfg };
        if smoke.is_some() {
            cfg.max_epochs = 1;
        }
        let (state, log) = train(&spec, &train_w, &val_w, &cfg)?;
        let val = evaluate(&state, &val_w, cfg.batch_size)?;
        let test = evaluate(&state, &test_w, cfg.batch_size)?;
        log::info!(
            "{} T={} {} seed {seed}: test mse {:.4} mae {:.4} (best epoch {})",
            prepared.name,
            prepared.horizon,
            variant.label(),
            test.mse,
            test.mae,
            log.best_epoch
        );
        if best.as_ref().is_none_or(|(m, _)| val.mse < *m) {
            best = Some((val.mse, state));
        }
        outcomes.push(SeedOutcome { seed, val, test, log });
    }
    let (mse, mse_std) = mean_std(&outcomes.iter().map(|o| o.test.mse).collect::<Vec<_>>());
    let (mae, mae_std) = mean_std(&outcomes.iter().map(|o| o.test.mae).collect::<Vec<_>>());
    Ok(CellOutcome {
        row: BenchRow {
            dataset: prepared.name.clone(),
            horizon: prepared.horizon,
            model: variant.label().to_string(),
            mse,
            mae,
            mse_std,
            mae_std,
            seeds: seeds.to_vec(),
            runtime_s: started.elapsed().as_secs_f64(),
        },
        seeds: outcomes,
        best_state: best.expect("at least one seed ran").1,
    })
}
