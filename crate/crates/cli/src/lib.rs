//! Experiment driver around `pointscat-core`: configuration, data generation, recovery
//! runs, bound sweeps and kernel checks, all emitting JSON/CSV files.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Loaded;
pub use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "pointscat", version, about = "Recover point scatterers from far-field measurements")]
pub struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a measurement plan and observations from the configured truth.
    Simulate(Common),
    /// Linear and nonlinear recovery.
    Recover {
        #[command(flatten)]
        common: Common,
        /// Directory written by `simulate`; without it the data are simulated in memory.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Linearization error against its bound over a (κ, Δ) grid.
    BoundsSweep(Common),
    /// Near/far-region checks of the sampling kernel.
    KernelCheck(Common),
    /// Nonlinear step started from regular grids.
    GridInit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Compare two measure files.
    Match {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
        /// Matching radius; taken from --config (default 0.5/κ) when absent.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let mut loaded = Loaded::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        loaded.config.seed = seed;
    }
    Ok(loaded)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(c) => commands::simulate(&load(&c)?, &c.out),
        Command::Recover { common, data } => commands::recover(&load(&common)?, data.as_deref(), &common.out),
        Command::BoundsSweep(c) => commands::bounds_sweep(&load(&c)?, &c.out),
        Command::KernelCheck(c) => commands::kernel_check(&load(&c)?, &c.out),
        Command::GridInit { common, data } => commands::grid_init(&load(&common)?, data.as_deref(), &common.out),
        Command::Match { truth, estimate, radius, config, out } => {
            let radius = match (radius, config) {
                (Some(r), _) => r,
                (None, Some(p)) => Loaded::from_path(&p)?.config.match_radius(),
                (None, None) => return Err(CliError::Config("match needs --radius or --config".into())),
            };
            commands::match_files(&truth, &estimate, radius, &out)
        }
    }
}
