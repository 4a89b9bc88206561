mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{bench, inspect, profile, train};

/// Train, benchmark and profile feature-pyramid linear forecasters.
#[derive(Debug, Parser)]
#[command(name = "pyramidcast", version, about)]
pub struct Cli {
    /// Directory holding the benchmark CSV files [default: ./dataset].
    #[arg(long, global = true, env = "PYRAMIDCAST_DATA")]
    pub data_dir: Option<PathBuf>,

    /// TOML manifest mapping dataset names to files.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model on one dataset and horizon.
    Train(train::Args),
    /// Run a dataset x model x horizon grid and write a report.
    Bench(bench::Args),
    /// Print parameter and MAC counts.
    Profile(profile::Args),
    /// Print pyramid level lengths and variances.
    InspectPyramid(inspect::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Train(args) => train::run(&cli, args),
        Command::Bench(args) => bench::run(&cli, args),
        Command::Profile(args) => profile::run(&cli, args),
        Command::InspectPyramid(args) => inspect::run(&cli, args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", render(e.error()));
            ExitCode::from(e.code())
        }
    }
}

/// Error chain joined with `: `, skipping causes already quoted by a parent.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}
