//! Batch experiment runner: reproducible noise generation, denoiser
//! equivariance checks, sampling sweeps, distillation and metrics, all
//! driven by one TOML config per run.

mod commands;
mod config;
mod csvio;
mod error;
mod pgm;
mod svg;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use error::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "eqvt", version, about = "Warped-noise diffusion experiment runner")]
struct Cli {
    /// Path to the experiment TOML config.
    #[arg(long, global = true, default_value = "eqvt.toml")]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override the worker count (0 = library default).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a flow-warped noise volume (EQVT container).
    GenNoise,
    /// Run the Gaussianity statistics suite over many seeds.
    VerifyGaussianity,
    /// Analytic and fitted denoiser equivariance errors.
    Equivariance,
    /// Sampling quality and consistency versus the mixing weight beta.
    BetaSweep,
    /// Terminal error, straightness and consistency versus step count.
    StepsSweep,
    /// Noise-to-video distance versus beta.
    Distance,
    /// One-step generator distillation with convergence log.
    Dmd,
    /// Cross-frame PSNR over stored frames and flows.
    CfPsnr,
    /// Render a CSV as an SVG line plot.
    Plot,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = ExperimentConfig::load(&cli.config)?;
    config.apply_overrides(cli.seed, cli.out_dir, cli.workers);
    if config.run.workers > 0 {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.workers)
            .build_global();
    }
    match cli.command {
        Command::GenNoise => commands::gen_noise(&config),
        Command::VerifyGaussianity => commands::verify_gaussianity(&config),
        Command::Equivariance => commands::equivariance(&config),
        Command::BetaSweep => commands::beta_sweep(&config),
        Command::StepsSweep => commands::steps_sweep(&config),
        Command::Distance => commands::distance(&config),
        Command::Dmd => commands::dmd(&config),
        Command::CfPsnr => commands::cf_psnr_cmd(&config),
        Command::Plot => commands::plot(&config),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.category.exit_code());
    }
}
