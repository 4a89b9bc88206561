use std::path::PathBuf;

use anyhow::Context;
use clap::Args as ClapArgs;
use pyramidcast_core::evaluation::evaluate;
use pyramidcast_core::experiment::{CellData, Smoke};
use pyramidcast_core::models::save_checkpoint;
use pyramidcast_core::data::Part;
use pyramidcast_core::{train, Error, Variant};

use super::{catalog, failed, load_config, usage, CliResult, HyperArgs, HYPER_KEYS};
use crate::Cli;

#[derive(Debug, ClapArgs)]
pub struct Args {
    #[arg(long)]
    pub dataset: Option<String>,
    /// linear, nlinear, dlinear, fpn-linear, fpnm-linear or fpn-fusion.
    #[arg(long)]
    pub model: Option<Variant>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Defaults to 104 for ILI and 336 otherwise.
    #[arg(long)]
    pub lookback: Option<usize>,
    /// Forecast only the target channel (OT for ETT).
    #[arg(long)]
    pub univariate: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Subsample windows and channels to this fraction and train one epoch.
    #[arg(long)]
    pub smoke: Option<f64>,
    /// Output directory for the checkpoint and training log.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

const KEYS: &[&str] = &["dataset", "model", "horizon", "lookback", "univariate", "seed", "smoke", "out"];

pub fn run(cli: &Cli, args: &Args) -> CliResult<u8> {
    let mut keys = KEYS.to_vec();
    keys.extend(HYPER_KEYS);
    let cfg = load_config(cli, &keys)?;
    let dataset: String = cfg
        .pick_opt(args.dataset.clone(), "dataset")
        .map_err(usage)?
        .ok_or_else(|| usage(anyhow::anyhow!("--dataset is required")))?;
    let variant: Variant = cfg
        .pick_opt(args.model, "model")
        .map_err(usage)?
        .ok_or_else(|| usage(anyhow::anyhow!("--model is required")))?;
    let horizon: usize = cfg
        .pick_opt(args.horizon, "horizon")
        .map_err(usage)?
        .ok_or_else(|| usage(anyhow::anyhow!("--horizon is required")))?;
    let (mut train_cfg, options) = args.hyper.resolve(&cfg)?;
    train_cfg.seed = cfg.pick(args.seed, "seed", train_cfg.seed).map_err(usage)?;
    let smoke = cfg
        .pick_opt(args.smoke, "smoke")
        .map_err(usage)?
        .map(Smoke::new)
        .transpose()
        .map_err(usage)?;
    if smoke.is_some() {
        train_cfg.max_epochs = 1;
    }
    let univariate = cfg.flag(args.univariate, "univariate").map_err(usage)?;
    let cell = CellData {
        dataset: dataset.clone(),
        lookback: cfg.pick_opt(args.lookback, "lookback").map_err(usage)?,
        horizon,
        univariate,
        smoke,
    };
    let out = cfg
        .pick_opt(args.out.clone(), "out")
        .map_err(usage)?
        .unwrap_or_else(|| {
            let task = if univariate { "S" } else { "M" };
            PathBuf::from("runs").join(format!(
                "{dataset}_{}_{task}_L{}_T{horizon}_seed{}",
                variant.name(),
                cell.lookback(),
                train_cfg.seed
            ))
        });

    let catalog = catalog(cli, &cfg)?;
    let prepared = cell.load(&catalog).map_err(usage)?;
    let spec = options.spec(variant, &prepared);
    spec.validate().map_err(usage)?;

    let train_w = prepared.windows(Part::Train);
    let val_w = prepared.windows(Part::Val);
    let test_w = prepared.windows(Part::Test);
    let (state, log) = match train(&spec, &train_w, &val_w, &train_cfg) {
        Ok(v) => v,
        Err(Error::Diverged { epoch, batch, last_good }) => {
            std::fs::create_dir_all(&out).map_err(failed)?;
            let path = out.join("last_good.ckpt");
            save_checkpoint(&last_good, &path).map_err(failed)?;
            return Err(failed(anyhow::anyhow!(
                "training diverged at epoch {epoch}, batch {batch}; last good parameters saved to {}",
                path.display()
            )));
        }
        Err(e @ (Error::EmptyWindows | Error::InvalidConfig(_))) => return Err(usage(e)),
        Err(e) => return Err(failed(e)),
    };
    let val = evaluate(&state, &val_w, train_cfg.batch_size).map_err(failed)?;
    let test = evaluate(&state, &test_w, train_cfg.batch_size).map_err(failed)?;

    std::fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(failed)?;
    save_checkpoint(&state, out.join("model.ckpt")).map_err(failed)?;
    log.write_csv(out.join("train_log.csv")).map_err(failed)?;

    println!(
        "{} {} T={} L={} C={} best_epoch={} val_mse={:.6} val_mae={:.6} test_mse={:.6} test_mae={:.6}",
        prepared.name,
        variant.label(),
        horizon,
        prepared.lookback,
        prepared.channels(),
        log.best_epoch,
        val.mse,
        val.mae,
        test.mse,
        test.mae
    );
    println!("wrote {}", out.display());
    Ok(0)
}
