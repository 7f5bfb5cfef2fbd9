use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hprqp::engine::Sigma0Rule;
use hprqp::{SolverConfig, Variant};

use crate::CliError;

/// Output directory used when `--out` is not given.
pub const OUT_DIR_ENV: &str = "HPRQP_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "hprqp-out";

#[derive(Debug, Parser)]
#[command(
    name = "hprqp",
    version,
    about = "Halpern Peaceman-Rachford solver for convex composite QPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance (QPS file or Matrix Market bundle directory).
    Solve(SolveArgs),
    /// Write the instances of a recipe as Matrix Market bundles.
    Gen(GenArgs),
    /// Solve a suite and aggregate SGM10, solved counts and profiles.
    Bench(BenchArgs),
    /// Aggregate an existing records CSV.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Relative KKT tolerance (1e-4, 1e-6 and 1e-8 are the usual levels).
    #[arg(long, default_value_t = 1e-8, allow_negative_numbers = true)]
    pub tol: f64,
    /// Wall-clock limit in seconds, excluding loading and preconditioning.
    #[arg(long, default_value_t = 3600.0, allow_negative_numbers = true)]
    pub time_limit: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Initial penalty: a positive number or `auto`.
    #[arg(long, default_value = "auto")]
    pub sigma0: String,
    /// Skip Ruiz and Pock-Chambolle scaling.
    #[arg(long)]
    pub no_scaling: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverFlags {
    pub fn config(&self) -> Result<SolverConfig, CliError> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(CliError::Usage(format!(
                "--tol must be positive, got {}",
                self.tol
            )));
        }
        if self.time_limit.is_nan() || self.time_limit <= 0.0 {
            return Err(CliError::Usage(format!(
                "--time-limit must be positive, got {}",
                self.time_limit
            )));
        }
        let sigma0 = if self.sigma0.eq_ignore_ascii_case("auto") {
            Sigma0Rule::Auto
        } else {
            match self.sigma0.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Sigma0Rule::Fixed(v),
                _ => {
                    return Err(CliError::Usage(format!(
                        "--sigma0 must be positive or `auto`, got `{}`",
                        self.sigma0
                    )))
                }
            }
        };
        let mut cfg = SolverConfig {
            tol: self.tol,
            time_limit: self.time_limit,
            sigma0,
            scaling: !self.no_scaling,
            seed: self.seed,
            ..SolverConfig::default()
        };
        cfg.power.seed = self.seed;
        if let Some(k) = self.max_iter {
            cfg.max_iter = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long, default_value = "dual")]
    pub variant: Variant,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include the solution vector in result.json.
    #[arg(long)]
    pub write_x: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Recipe JSON file describing instance families.
    pub recipe: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of instances (QPS files and bundle subdirectories) or a recipe JSON.
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Comma-separated tolerance levels; overrides --tol.
    #[arg(long, value_delimiter = ',')]
    pub tols: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "dual")]
    pub variants: Vec<Variant>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// records.csv written by `bench`.
    pub records: PathBuf,
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}
