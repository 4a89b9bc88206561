pub mod bench;
pub mod inspect;
pub mod profile;
pub mod train;

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args as ClapArgs;
use pyramidcast_core::data::{Catalog, Manifest};
use pyramidcast_core::experiment::ModelOptions;
use pyramidcast_core::{PyramidConfig, TrainConfig};

use crate::config::ConfigFile;
use crate::Cli;

pub const EXIT_CELL_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or inputs: exit 2.
    Usage(anyhow::Error),
    /// A run that started but failed: exit 1.
    Run(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(_) => EXIT_CELL_FAILURE,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            CliError::Usage(e) | CliError::Run(e) => e,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Usage(e.into())
}

pub fn failed<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Run(e.into())
}

/// Config file named by `--config`, checked against `allowed` keys.
pub fn load_config(cli: &Cli, allowed: &[&str]) -> CliResult<ConfigFile> {
    let Some(path) = &cli.config else {
        return Ok(ConfigFile::default());
    };
    let cfg = ConfigFile::load(path).map_err(usage)?;
    let mut keys: Vec<&str> = allowed.to_vec();
    keys.extend(["data_dir", "manifest"]);
    cfg.check_keys(&keys).map_err(usage)?;
    Ok(cfg)
}

pub fn catalog(cli: &Cli, cfg: &ConfigFile) -> CliResult<Catalog> {
    let root = match &cli.data_dir {
        Some(dir) => dir.clone(),
        None => cfg
            .get::<String>("data_dir")
            .map_err(usage)?
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("dataset")),
    };
    let mut catalog = Catalog::new(root);
    let manifest = match &cli.manifest {
        Some(p) => Some(p.clone()),
        None => cfg.get::<String>("manifest").map_err(usage)?.map(Into::into),
    };
    if let Some(path) = manifest {
        let m = Manifest::load(&path)
            .with_context(|| format!("loading manifest {}", path.display()))
            .map_err(usage)?;
        catalog = catalog.with_manifest(m);
    }
    Ok(catalog)
}

/// Optimizer and architecture flags shared by `train` and `bench`.
#[derive(Debug, Clone, Default, ClapArgs)]
pub struct HyperArgs {
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    /// Epochs at the initial learning rate before decay starts.
    #[arg(long)]
    pub decay_after: Option<usize>,
    /// Keep chronological batch order.
    #[arg(long)]
    pub no_shuffle: bool,
    /// Pyramid depth for FPN variants.
    #[arg(long)]
    pub stages: Option<usize>,
    /// DLinear moving-average window.
    #[arg(long)]
    pub ma_kernel: Option<usize>,
    /// One layer group shared by all channels instead of one per channel.
    #[arg(long)]
    pub shared: bool,
}

pub const HYPER_KEYS: &[&str] = &[
    "batch_size",
    "epochs",
    "patience",
    "lr",
    "lr_decay",
    "decay_after",
    "no_shuffle",
    "stages",
    "ma_kernel",
    "shared",
];

impl HyperArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> CliResult<(TrainConfig, ModelOptions)> {
        let d = TrainConfig::default();
        let train = TrainConfig {
            batch_size: cfg.pick(self.batch_size, "batch_size", d.batch_size).map_err(usage)?,
            max_epochs: cfg.pick(self.epochs, "epochs", d.max_epochs).map_err(usage)?,
            patience: cfg.pick(self.patience, "patience", d.patience).map_err(usage)?,
            lr: cfg.pick(self.lr, "lr", d.lr).map_err(usage)?,
            lr_decay: cfg.pick(self.lr_decay, "lr_decay", d.lr_decay).map_err(usage)?,
            decay_after: cfg.pick(self.decay_after, "decay_after", d.decay_after).map_err(usage)?,
            seed: d.seed,
            shuffle: !cfg.flag(self.no_shuffle, "no_shuffle").map_err(usage)?,
        };
        train.validate().map_err(usage)?;
        let m = ModelOptions::default();
        let stages = cfg.pick(self.stages, "stages", m.pyramid.stages).map_err(usage)?;
        let options = ModelOptions {
            pyramid: PyramidConfig::with_stages(stages),
            ma_kernel: cfg.pick(self.ma_kernel, "ma_kernel", m.ma_kernel).map_err(usage)?,
            channel_individual: !cfg.flag(self.shared, "shared").map_err(usage)?,
        };
        if stages == 0 {
            return Err(usage(anyhow!("--stages must be >= 1")));
        }
        Ok((train, options))
    }
}
