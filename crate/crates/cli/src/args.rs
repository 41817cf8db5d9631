use std::path::PathBuf;

use block_ising::dynamics::DEFAULT_SEED;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "block-ising", version, about = "Glauber dynamics on the multi-block Curie-Weiss model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Instance JSON with fields n, p, k.
    #[arg(long)]
    pub instance: PathBuf,
    /// Inverse temperature.
    #[arg(long, conflicts_with = "beta_frac")]
    pub beta: Option<f64>,
    /// Inverse temperature as a multiple of the critical value.
    #[arg(long)]
    pub beta_frac: Option<f64>,
    /// Replace the instance's number of sites.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, env = "BLOCK_ISING_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral constants: rho_n, Perron vector, beta_cr, alpha, eigenpairs.
    Spectral(Plain),
    /// Exact total-variation curve from one start.
    TvCurve(TvCurveArgs),
    /// Exact mixing time.
    Mixing(MixingArgs),
    /// Cutoff profile over several n.
    Cutoff(CutoffArgs),
    /// Critical mixing-time exponent.
    Critical(CriticalArgs),
    /// Conductance decay and metastable exit times.
    Metastable(MetastableArgs),
    /// Exact critical law of the rescaled top coordinate against its quartic limit.
    Nonclt(Plain),
    /// Fixed points of the mean-field equation.
    Landscape(Plain),
    /// Coupling times of two copies.
    Couple(CoupleArgs),
    /// Metastable exit times from all-plus.
    ExitTime(ExitArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Plain {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TvCurveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated block magnetizations; defaults to all-plus.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub t_max: u64,
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Starts {
    Corners,
    Exhaustive,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MixingArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = Starts::Corners)]
    pub starts: Starts,
    /// Largest number of steps tried before giving up.
    #[arg(long, default_value_t = 1 << 40)]
    pub ceiling: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CutoffArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-6,-4,-2,0,2,4,6,10,25")]
    pub gamma_list: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetastableArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "16,24,32,40,48")]
    pub n_list: Vec<usize>,
    /// Monte Carlo replicas per n; 0 skips the exit-time part.
    #[arg(long, default_value_t = 201)]
    pub replicas: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub horizon: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Monotone,
    TwoPhase,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Strategy::TwoPhase)]
    pub mode: Strategy,
    #[arg(long, default_value_t = 1000)]
    pub replicas: u64,
    /// Censoring horizon; defaults by temperature regime.
    #[arg(long)]
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 201)]
    pub replicas: u64,
    #[arg(long)]
    pub horizon: u64,
}
