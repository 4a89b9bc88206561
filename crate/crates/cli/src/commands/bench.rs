use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args as ClapArgs;
use pyramidcast_core::data::{default_horizons, known};
use pyramidcast_core::evaluation::{quoted_reference, CellFailure};
use pyramidcast_core::experiment::{run_cell, CellData, Smoke};
use pyramidcast_core::{emit_table, improvement, BenchReport, Error, TableFormat, Variant};

use super::{catalog, failed, load_config, usage, CliResult, HyperArgs, EXIT_CELL_FAILURE, HYPER_KEYS};
use crate::Cli;

const ILI_HORIZONS: [usize; 4] = [24, 36, 48, 60];

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Comma-separated dataset names.
    #[arg(long, value_delimiter = ',')]
    pub datasets: Option<Vec<String>>,
    /// Comma-separated variants [default: fpn-fusion,dlinear].
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<Variant>>,
    /// Comma-separated horizons [default: 24,36,48,60 for ILI, else 96,192,336,720].
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
    #[arg(long)]
    pub lookback: Option<usize>,
    #[arg(long)]
    pub univariate: bool,
    /// Comma-separated seeds; more than one reports mean and standard deviation.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Subsample windows and channels to this fraction and train one epoch.
    #[arg(long)]
    pub smoke: Option<f64>,
    /// Add published reference columns, marked as quoted.
    #[arg(long)]
    pub quoted: bool,
    /// Directory for report.csv and report.md.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

const KEYS: &[&str] = &[
    "datasets",
    "models",
    "horizons",
    "lookback",
    "univariate",
    "seeds",
    "smoke",
    "quoted",
    "out",
];

fn is_ili(name: &str) -> bool {
    known(name).is_some_and(|k| k.name == "ILI")
}

pub fn run(cli: &Cli, args: &Args) -> CliResult<u8> {
    let mut keys = KEYS.to_vec();
    keys.extend(HYPER_KEYS);
    let cfg = load_config(cli, &keys)?;
    let datasets: Vec<String> = cfg
        .pick_list(args.datasets.clone(), "datasets")
        .map_err(usage)?
        .filter(|d| !d.is_empty())
        .ok_or_else(|| usage(anyhow!("--datasets is required")))?;
    let models = cfg
        .pick_list(args.models.clone(), "models")
        .map_err(usage)?
        .unwrap_or_else(|| vec![Variant::FpnFusion, Variant::DLinear]);
    let horizons: Option<Vec<usize>> = cfg.pick_list(args.horizons.clone(), "horizons").map_err(usage)?;
    let lookback = cfg.pick_opt(args.lookback, "lookback").map_err(usage)?;
    let univariate = cfg.flag(args.univariate, "univariate").map_err(usage)?;
    let (train_cfg, options) = args.hyper.resolve(&cfg)?;
    let seeds = cfg
        .pick_list(args.seeds.clone(), "seeds")
        .map_err(usage)?
        .unwrap_or_else(|| vec![train_cfg.seed]);
    if seeds.is_empty() {
        return Err(usage(anyhow!("--seeds must name at least one seed")));
    }
    let smoke = cfg
        .pick_opt(args.smoke, "smoke")
        .map_err(usage)?
        .map(Smoke::new)
        .transpose()
        .map_err(usage)?;
    let quoted = cfg.flag(args.quoted, "quoted").map_err(usage)?;
    let out = cfg
        .pick_opt(args.out.clone(), "out")
        .map_err(usage)?
        .unwrap_or_else(|| PathBuf::from("reports"));
    let catalog = catalog(cli, &cfg)?;

    // Validate the whole grid before running anything.
    let mut grid = Vec::new();
    for name in &datasets {
        catalog.resolve(name).map_err(usage)?;
        let hs = horizons.clone().unwrap_or_else(|| default_horizons(name).to_vec());
        if is_ili(name) {
            if let Some(bad) = hs.iter().find(|h| !ILI_HORIZONS.contains(h)) {
                return Err(usage(anyhow!(
                    "ILI horizon {bad} is not allowed; ILI horizons are {ILI_HORIZONS:?}"
                )));
            }
        }
        if hs.is_empty() || hs.contains(&0) {
            return Err(usage(anyhow!("horizons must be positive")));
        }
        grid.push((name.clone(), hs));
    }

    let mut report = BenchReport::default();
    for (name, hs) in &grid {
        let raw = catalog.load(name);
        for &horizon in hs {
            let cell = CellData {
                dataset: name.clone(),
                lookback,
                horizon,
                univariate,
                smoke,
            };
            let prepared = raw.as_ref().map_err(|e| e.to_string()).and_then(|raw| cell.prepare(raw).map_err(|e| e.to_string()));
            for &variant in &models {
                let result = prepared
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|p| run_cell(p, variant, &options, &train_cfg, &seeds, smoke).map_err(|e: Error| e.to_string()));
                match result {
                    Ok(outcome) => {
                        eprintln!(
                            "{} T={} {}: mse {:.4} mae {:.4} ({:.1}s)",
                            outcome.row.dataset,
                            horizon,
                            variant.label(),
                            outcome.row.mse,
                            outcome.row.mae,
                            outcome.row.runtime_s
                        );
                        report.rows.push(outcome.row);
                    }
                    Err(error) => {
                        eprintln!("{name} T={horizon} {}: FAILED: {error}", variant.label());
                        report.failures.push(CellFailure {
                            dataset: name.clone(),
                            horizon,
                            model: variant.label().to_string(),
                            error,
                        });
                    }
                }
            }
        }
    }
    if quoted {
        report.attach_quoted(quoted_reference(if univariate { "univariate" } else { "multivariate" }));
    }

    std::fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(failed)?;
    let markdown = emit_table(&report, TableFormat::Markdown);
    std::fs::write(out.join("report.md"), &markdown).map_err(failed)?;
    std::fs::write(out.join("report.csv"), emit_table(&report, TableFormat::Csv)).map_err(failed)?;
    print!("{markdown}");

    let (base, new) = (Variant::DLinear.label(), Variant::FpnFusion.label());
    if report.rows.iter().any(|r| r.model == base) && report.rows.iter().any(|r| r.model == new) {
        match improvement(&report, base, new) {
            Ok(imp) => println!(
                "\n{new} vs {base}: mean MSE reduction {:.1}%, mean MAE reduction {:.1}% over {} cells",
                imp.mse * 100.0,
                imp.mae * 100.0,
                imp.cells
            ),
            Err(e) => println!("\n{new} vs {base}: not computed ({e})"),
        }
    }
    println!("wrote {} and {}", out.join("report.csv").display(), out.join("report.md").display());
    if report.failures.is_empty() {
        Ok(0)
    } else {
        eprintln!("{} cell(s) failed", report.failures.len());
        Ok(EXIT_CELL_FAILURE)
    }
}
