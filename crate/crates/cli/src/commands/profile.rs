use std::path::PathBuf;

use anyhow::Context;
use clap::Args as ClapArgs;
use pyramidcast_core::efficiency::{efficiency_csv, efficiency_table, instrument_forward};
use pyramidcast_core::{ModelSpec, ModelState, PyramidConfig, Variant};

use super::{failed, load_config, usage, CliResult};
use crate::Cli;

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// One or more comma-separated variants.
    #[arg(long, value_delimiter = ',')]
    pub model: Option<Vec<Variant>>,
    #[arg(long)]
    pub lookback: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub ma_kernel: Option<usize>,
    #[arg(long)]
    pub shared: bool,
    /// Also write the records as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

const KEYS: &[&str] = &["model", "lookback", "horizon", "channels", "batch", "stages", "ma_kernel", "shared", "csv"];

pub fn run(cli: &Cli, args: &Args) -> CliResult<u8> {
    let cfg = load_config(cli, KEYS)?;
    let variants = cfg
        .pick_list(args.model.clone(), "model")
        .map_err(usage)?
        .unwrap_or_else(|| vec![Variant::FpnFusion, Variant::DLinear]);
    let lookback = cfg.pick(args.lookback, "lookback", 336).map_err(usage)?;
    let horizon = cfg.pick(args.horizon, "horizon", 96).map_err(usage)?;
    let channels = cfg.pick(args.channels, "channels", 7).map_err(usage)?;
    let batch = cfg.pick(args.batch, "batch", 32).map_err(usage)?;
    let stages = cfg.pick(args.stages, "stages", PyramidConfig::default().stages).map_err(usage)?;
    let ma_kernel = cfg.pick(args.ma_kernel, "ma_kernel", 25).map_err(usage)?;
    let shared = cfg.flag(args.shared, "shared").map_err(usage)?;

    let mut records = Vec::with_capacity(variants.len());
    for variant in variants {
        let mut spec = ModelSpec::new(variant, lookback, horizon, channels).with_stages(stages);
        spec.ma_kernel = ma_kernel;
        spec.channel_individual = !shared;
        let state = ModelState::zeroed(&spec).map_err(usage)?;
        records.push(instrument_forward(&state, batch).map_err(failed)?);
    }
    print!("{}", efficiency_table(&records));
    let csv = cfg.pick_opt(args.csv.clone(), "csv").map_err(usage)?;
    if let Some(path) = csv {
        std::fs::write(&path, efficiency_csv(&records))
            .with_context(|| format!("writing {}", path.display()))
            .map_err(failed)?;
    }
    Ok(0)
}
