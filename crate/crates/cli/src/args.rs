//! Command-line arguments. Every command's arguments double as its record in
//! a run config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "betasplice",
    version,
    about = "Spliced beta-Stacy survival estimation with exact posterior sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a censored sample from one of the synthetic protocols.
    Simulate(SimulateArgs),
    /// Fit a Pareto or Weibull tail and write a JSON report and QQ points.
    Fit(FitArgs),
    /// Posterior mean, variance and spliced survival on a grid.
    Splice(SpliceArgs),
    /// Sample posterior paths and summarize them with a credible band.
    Sample(SampleArgs),
    /// Run one of the built-in oracle suites.
    Validate(ValidateArgs),
    /// Execute a command stored in a JSON config file.
    Run(RunArgs),
}

/// A fully resolved command, as stored in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Simulate(SimulateArgs),
    Fit(FitArgs),
    Splice(SpliceArgs),
    Sample(SampleArgs),
    Validate(ValidateArgs),
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::Simulate(a) => a.seed,
            RunConfig::Fit(a) => a.seed,
            RunConfig::Splice(a) => a.seed,
            RunConfig::Sample(a) => a.seed,
            RunConfig::Validate(a) => a.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailArg {
    Pareto,
    Weibull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Hazard,
    LogSurvival,
    Survival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteArg {
    Moments,
    Laplace,
    Thinning,
    Bvm,
}

fn default_seed() -> u64 {
    0
}
fn default_time_column() -> String {
    "time".into()
}
fn default_event_column() -> String {
    "event".into()
}
fn default_grid() -> String {
    "default".into()
}
fn default_an_rule() -> String {
    "log_n".into()
}
fn default_q() -> f64 {
    1.0
}
fn default_tail() -> TailArg {
    TailArg::Pareto
}
fn default_paths() -> usize {
    1000
}
fn default_level() -> f64 {
    0.95
}
fn default_kind() -> KindArg {
    KindArg::Hazard
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: TailArg,
    #[arg(long)]
    pub n: usize,
    /// Tail index; 1.8 for Pareto and 2 for Weibull when omitted.
    #[arg(long)]
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Weibull shape.
    #[arg(long, default_value_t = 0.5)]
    #[serde(default = "default_p")]
    pub p: f64,
    #[arg(long)]
    #[serde(default)]
    pub uncensored: bool,
    #[arg(long, default_value_t = 0)]
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}

fn default_p() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "time")]
    #[serde(default = "default_time_column")]
    pub time_column: String,
    #[arg(long, default_value = "event")]
    #[serde(default = "default_event_column")]
    pub event_column: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TailArgs {
    #[arg(long, value_enum, default_value_t = TailArg::Pareto)]
    #[serde(default = "default_tail")]
    pub tail: TailArg,
    /// Number of upper order statistics; `⌈2√n⌉` when omitted.
    #[arg(long)]
    #[serde(default)]
    pub k: Option<usize>,
    /// Registered estimator name, overriding the default for `--tail`.
    #[arg(long)]
    #[serde(default)]
    pub estimator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PriorArgs {
    /// Constant baseline hazard below the threshold.
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "default_q")]
    pub q: f64,
    /// `log_n`, `const:<value>` or `infinity`.
    #[arg(long, default_value = "log_n")]
    #[serde(default = "default_an_rule")]
    pub an_rule: String,
    /// Same as `--an-rule infinity`.
    #[arg(long)]
    #[serde(default)]
    pub exact_splice: bool,
    /// Splicing threshold; the fit's `T_{n-k,n}` when omitted.
    #[arg(long)]
    #[serde(default)]
    pub t0: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub tail_from: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub tail: TailArgs,
    #[arg(long, default_value_t = 0)]
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// JSON report.
    #[arg(long)]
    pub output: PathBuf,
    /// QQ points; next to the report when omitted.
    #[arg(long)]
    #[serde(default)]
    pub qq_output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpliceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Report written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub prior: PriorArgs,
    /// `default`, `uniform:<points>:<max>` or `list:<t1>,<t2>,...`.
    #[arg(long, default_value = "default")]
    #[serde(default = "default_grid")]
    pub grid: String,
    #[arg(long, default_value_t = 0)]
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Report written by `fit`; the tail is fitted here when omitted.
    #[arg(long)]
    #[serde(default)]
    pub fit: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tail: TailArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub prior: PriorArgs,
    #[arg(long, value_enum, default_value_t = KindArg::Hazard)]
    #[serde(default = "default_kind")]
    pub kind: KindArg,
    #[arg(long, default_value_t = 1000)]
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[arg(long, default_value = "default")]
    #[serde(default = "default_grid")]
    pub grid: String,
    #[arg(long, default_value_t = 0.95)]
    #[serde(default = "default_level")]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Grid, mean and band.
    #[arg(long)]
    pub output: PathBuf,
    /// Raw paths, one column each.
    #[arg(long)]
    #[serde(default)]
    pub paths_output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// JSON report.
    #[arg(long)]
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Bias the hazard sampler.
    #[arg(long, hide = true)]
    #[serde(default)]
    pub corrupt: bool,
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}
