use anyhow::anyhow;
use clap::Args as ClapArgs;
use pyramidcast_core::experiment::univariate_target;
use pyramidcast_core::pyramid::sample_variance;
use pyramidcast_core::{build_pyramid, level_lengths, DenseArray, PyramidConfig};

use super::{catalog, load_config, usage, CliResult};
use crate::Cli;

#[derive(Debug, ClapArgs)]
pub struct Args {
    #[arg(long)]
    pub lookback: Option<usize>,
    #[arg(long)]
    pub stages: Option<usize>,
    /// Sample a look-back block from this dataset.
    #[arg(long, conflicts_with = "constant")]
    pub dataset: Option<String>,
    /// Column to sample [default: OT, else the last column].
    #[arg(long)]
    pub column: Option<String>,
    /// First row of the sampled block.
    #[arg(long)]
    pub start: Option<usize>,
    /// Use a constant series instead of a dataset.
    #[arg(long)]
    pub constant: Option<f64>,
}

const KEYS: &[&str] = &["lookback", "stages", "dataset", "column", "start", "constant"];

pub fn run(cli: &Cli, args: &Args) -> CliResult<u8> {
    let cfg = load_config(cli, KEYS)?;
    let lookback = cfg.pick(args.lookback, "lookback", 336).map_err(usage)?;
    let stages = cfg.pick(args.stages, "stages", PyramidConfig::default().stages).map_err(usage)?;
    let pcfg = PyramidConfig::with_stages(stages);
    if stages == 0 {
        return Err(usage(anyhow!("--stages must be >= 1")));
    }
    let lengths = level_lengths(lookback, &pcfg).map_err(usage)?;

    let dataset: Option<String> = cfg.pick_opt(args.dataset.clone(), "dataset").map_err(usage)?;
    let constant: Option<f64> = cfg.pick_opt(args.constant, "constant").map_err(usage)?;
    let (label, series) = match (dataset, constant) {
        (Some(_), Some(_)) => return Err(usage(anyhow!("give either --dataset or --constant, not both"))),
        (None, Some(c)) => (format!("constant {c}"), vec![c; lookback]),
        (Some(name), None) => {
            let raw = catalog(cli, &cfg)?.load(&name).map_err(usage)?;
            let column = match cfg.pick_opt(args.column.clone(), "column").map_err(usage)? {
                Some(c) => c,
                None => univariate_target(&raw).map_err(usage)?.to_string(),
            };
            let j = raw
                .column_index(&column)
                .ok_or_else(|| usage(anyhow!("{} has no column `{column}`", raw.name)))?;
            let start = cfg.pick(args.start, "start", 0).map_err(usage)?;
            if start + lookback > raw.rows() {
                return Err(usage(anyhow!(
                    "block {start}..{} exceeds {} rows",
                    start + lookback,
                    raw.rows()
                )));
            }
            let values = (start..start + lookback).map(|r| raw.values.row(r)[j]).collect();
            (format!("{} `{column}` rows {start}..{}", raw.name, start + lookback), values)
        }
        (None, None) => return Err(usage(anyhow!("give --dataset <name> or --constant <value>"))),
    };

    let x = DenseArray::new(vec![lookback, 1], series).map_err(usage)?;
    let pyramid = build_pyramid(&x, &pcfg).map_err(usage)?;
    println!("{label}");
    println!("level,length,variance");
    for (i, (level, len)) in pyramid.levels.iter().zip(&lengths).enumerate() {
        println!("{},{},{:.6}", i + 1, len, sample_variance(level.data()));
    }
    Ok(0)
}
