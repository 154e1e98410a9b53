//! Batch front end for the `longevity_core` pipeline.
//!
//! ```text
//! longevity [--seed N] [--out-dir DIR] [--config FILE] <fit|project|simulate|expectancy> ...
//! ```
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 validation, 5 numerical degeneracy.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use longevity_core::SurfaceVariant;

use crate::commands::TableSource;
use crate::config::{RunConfig, RunMode, Settings};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "longevity",
    version,
    about = "Prospective mortality tables and annuity valuation"
)]
pub struct Cli {
    /// Seed of every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// TOML file of settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit Lee-Carter parameters and the period-index trend of a surface.
    Fit(FitArgs),
    /// Trend corridor, sampled trajectories and sampled surfaces.
    Project(ProjectArgs),
    /// Monte Carlo valuation of an annuity portfolio.
    Simulate(SimulateArgs),
    /// Cohort life expectancy by generation and its drift.
    Expectancy(ExpectancyArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub surface: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub trend: Option<PathBuf>,
    /// Last projected year.
    #[arg(long)]
    pub horizon: Option<i32>,
    #[arg(long)]
    pub variant: Option<SurfaceVariant>,
    /// Number of sampled trend lines.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Number of sampled surfaces to write.
    #[arg(long, default_value_t = 0)]
    pub surfaces: usize,
    #[arg(long)]
    pub confidence: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub surface: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub trend: Option<PathBuf>,
    #[arg(long)]
    pub portfolio: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<RunMode>,
    #[arg(long)]
    pub variant: Option<SurfaceVariant>,
    #[arg(long)]
    pub discount_rate: Option<f64>,
    #[arg(long)]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub inner: Option<usize>,
    /// Comma-separated portfolio multiples, e.g. `1,10,30`.
    #[arg(long, value_delimiter = ',')]
    pub replications: Option<Vec<usize>>,
    #[arg(long)]
    pub valuation_year: Option<i32>,
    #[arg(long)]
    pub omega_max: Option<u32>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub histogram_bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExpectancyArgs {
    #[arg(long, conflicts_with_all = ["params", "trend"])]
    pub surface: Option<PathBuf>,
    #[arg(long, requires = "trend")]
    pub params: Option<PathBuf>,
    #[arg(long, requires = "params")]
    pub trend: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    pub age: u32,
    /// First generation (birth year).
    #[arg(long)]
    pub from: i32,
    /// Last generation.
    #[arg(long)]
    pub to: i32,
    #[arg(long, conflicts_with_all = ["compare_params", "compare_trend"])]
    pub compare_surface: Option<PathBuf>,
    #[arg(long, requires = "compare_trend")]
    pub compare_params: Option<PathBuf>,
    #[arg(long, requires = "compare_params")]
    pub compare_trend: Option<PathBuf>,
    #[arg(long)]
    pub omega_max: Option<u32>,
}

fn source(
    surface: Option<PathBuf>,
    params: Option<PathBuf>,
    trend: Option<PathBuf>,
) -> Option<TableSource> {
    match (surface, params, trend) {
        (Some(s), _, _) => Some(TableSource::Surface(s)),
        (None, Some(params), Some(trend)) => Some(TableSource::Fitted { params, trend }),
        _ => None,
    }
}

impl Cli {
    fn base_settings(&self) -> CliResult<Settings> {
        let file = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        Ok(file.overlay(Settings {
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            ..Settings::default()
        }))
    }

    /// Runs the parsed command and returns the written artifacts.
    pub fn execute(self) -> CliResult<Vec<PathBuf>> {
        let base = self.base_settings()?;
        match self.command {
            Command::Fit(a) => commands::cmd_fit(&base.overlay(Settings {
                surface: a.surface,
                ..Settings::default()
            })),
            Command::Project(a) => {
                let settings = base.overlay(Settings {
                    params: a.params,
                    trend: a.trend,
                    horizon_year: a.horizon,
                    variant: a.variant,
                    paths: a.paths,
                    confidence: a.confidence,
                    ..Settings::default()
                });
                commands::cmd_project(&settings, a.surfaces)
            }
            Command::Simulate(a) => {
                let settings = base.overlay(Settings {
                    surface: a.surface,
                    params: a.params,
                    trend: a.trend,
                    portfolio: a.portfolio,
                    mode: a.mode,
                    variant: a.variant,
                    discount_rate: a.discount_rate,
                    scenarios: a.scenarios,
                    inner: a.inner,
                    replications: a.replications,
                    valuation_year: a.valuation_year,
                    omega_max: a.omega_max,
                    workers: a.workers,
                    histogram_bins: a.histogram_bins,
                    ..Settings::default()
                });
                commands::cmd_simulate(&RunConfig::from_settings(&settings)?)
            }
            Command::Expectancy(a) => {
                let settings = base.overlay(Settings {
                    omega_max: a.omega_max,
                    ..Settings::default()
                });
                if a.from > a.to {
                    return Err(CliError::Usage(format!(
                        "--from {} is after --to {}",
                        a.from, a.to
                    )));
                }
                let main = source(
                    a.surface,
                    a.params.or(settings.params.clone()),
                    a.trend.or(settings.trend.clone()),
                )
                .or_else(|| settings.surface.clone().map(TableSource::Surface))
                .ok_or_else(|| {
                    CliError::Usage("expectancy needs --surface or --params and --trend".into())
                })?;
                let compare = source(a.compare_surface, a.compare_params, a.compare_trend);
                commands::cmd_expectancy(&settings, &main, compare.as_ref(), a.age, a.from..=a.to)
            }
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.execute() {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
