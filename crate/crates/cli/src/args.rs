//! Command-line flags. Every option struct doubles as a config-file section:
//! flags given on the command line win over values from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "cgfit", version, about = "Coarse-grained model fitting with uncertainty quantification")]
pub struct Cli {
    /// TOML experiment file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed. Generated and printed when a stochastic command runs without one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate synthetic datasets.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Fit a model to a dataset.
    Fit(FitArgs),
    /// Confidence intervals for a fitted model.
    Ci(CiArgs),
    /// Coverage experiments and method comparisons.
    #[command(subcommand)]
    Validate(ValidateCmd),
    /// Plot-ready curves.
    #[command(subcommand)]
    Export(ExportCmd),
}

#[derive(Subcommand, Debug)]
pub enum SimulateCmd {
    /// Two-scale diffusion: i.i.d. samples, or paths with `--paths`.
    Twoscale(SimTwoScaleArgs),
    /// Particle configurations with pair forces.
    Pairs(SimPairsArgs),
}

#[derive(Subcommand, Debug)]
pub enum ValidateCmd {
    /// Empirical coverage of confidence intervals over repeated trials.
    Coverage(CoverageArgs),
    /// FM, RE and RER side by side on matched data.
    Compare(CompareArgs),
}

#[derive(Subcommand, Debug)]
pub enum ExportCmd {
    /// Invariant density of the monomial-drift model.
    Density(DensityArgs),
    /// Pair potential curve of a fit, optionally with a bootstrap band.
    Potential(PotentialArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Fm,
    FmTs,
    Re,
    Rer,
    Pairfm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiKind {
    Asymptotic,
    Jackknife,
    Bootstrap,
    Percentile,
    All,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTwoScaleArgs {
    /// Number of i.i.d. samples (ignored with --paths).
    #[arg(long)]
    pub n: Option<usize>,
    /// Record this many independent paths instead of i.i.d. samples.
    #[arg(long)]
    pub paths: Option<usize>,
    /// States per path.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Recorded time step of paths.
    #[arg(long)]
    pub h: Option<f64>,
    /// Time between i.i.d. samples.
    #[arg(long)]
    pub stride_time: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimPairsArgs {
    #[arg(long)]
    pub configs: Option<usize>,
    /// Particles per configuration.
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub box_length: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub force_noise: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitArgs {
    #[arg(value_enum)]
    pub method: Option<FitMethod>,
    /// Input dataset.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Number of basis functions (default 5 for drift, 30 for pair potentials).
    #[arg(long)]
    pub k: Option<usize>,
    /// Lower end of the pair-potential spline.
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Pair cutoff; also the upper end of the spline.
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// JSON estimate file (stdout summary only when absent).
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiArgs {
    #[arg(long, value_enum)]
    pub method: Option<CiKind>,
    /// Estimators, comma separated (`all` on i.i.d. data defaults to fm,re).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub estimator: Option<Vec<FitMethod>>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bootstrap replicates.
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<usize>,
    /// Batch length for batch means (default ⌊√n⌋).
    #[arg(long)]
    pub batch: Option<usize>,
    /// Number of basis functions (default 5 for drift, 30 for pair potentials).
    #[arg(long)]
    pub k: Option<usize>,
    /// Lower end of the pair-potential spline.
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Pair cutoff; also the upper end of the spline.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Grid for the band: `lo,hi,points`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    /// Interval table (CSV).
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Percentile band of the fitted curve (CSV `grid,lower,estimate,upper`).
    #[arg(long)]
    #[serde(skip_serializing)]
    pub band: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageArgs {
    #[arg(long, value_enum)]
    pub method: Option<FitMethod>,
    #[arg(long, value_enum)]
    pub ci: Option<CiKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Result file; `.json` gives JSON, anything else CSV.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareArgs {
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<FitMethod>>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Path length for RER and time-series FM.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub ci: Option<CiKind>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityArgs {
    /// Drift coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    /// Take the coefficients from a `fit` JSON file instead.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialArgs {
    /// `fit pairfm` JSON file.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Export the generator potential of the synthetic pair data instead.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub reference: Option<bool>,
    /// Configurations for a bootstrap band around the fitted curve.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}
