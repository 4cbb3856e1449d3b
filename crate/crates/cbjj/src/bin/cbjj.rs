//! Command-line front end: sweep commands and dataset analysis, driven by a
//! TOML run configuration.

use cbjj::report::commands::{
    cmd_boundary_map, cmd_efficiency_scan, cmd_fit, cmd_pulse_width_scan, cmd_rate_curve,
    cmd_sensitivity, CommandContext, Overrides,
};
use cbjj::report::config::RunConfig;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cbjj",
    version,
    about = "Current-biased Josephson junction switching detector: simulation and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config and CBJJ_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Root random seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweep points and trajectories.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output formats, comma separated: csv,json,svg.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Dark-count rate curve over a bias sweep with a thermal-activation fit.
    RateCurve,
    /// Switching-efficiency scan over bias or RF power.
    EfficiencyScan,
    /// Switching efficiency versus RF pulse duration with the
    /// independent-trials fit.
    PulseWidthScan,
    /// Langevin switching map over (bias, photon number).
    BoundaryMap,
    /// Detection-threshold energy, power and NEP figures.
    Sensitivity,
    /// Analyze a switching-time dataset file.
    Fit {
        /// Dataset file in the cbjj line format.
        dataset: PathBuf,
    },
}

fn run(cli: Cli) -> cbjj::Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            return Err(cbjj::Error::Config(
                "--config <file.toml> is required".into(),
            ))
        }
    };
    let ctx = CommandContext::new(
        config,
        Overrides {
            out_dir: cli.out.clone(),
            seed: cli.seed,
            jobs: cli.jobs,
            formats: cli.format.clone(),
        },
    )?;
    let bundle = match &cli.command {
        Command::RateCurve => cmd_rate_curve(&ctx)?,
        Command::EfficiencyScan => cmd_efficiency_scan(&ctx)?,
        Command::PulseWidthScan => cmd_pulse_width_scan(&ctx)?,
        Command::BoundaryMap => cmd_boundary_map(&ctx)?,
        Command::Sensitivity => cmd_sensitivity(&ctx)?,
        Command::Fit { dataset } => cmd_fit(&ctx, dataset)?,
    };
    for warning in &bundle.warnings {
        eprintln!("warning: {warning}");
    }
    for file in &bundle.files {
        println!("{}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
