//! Command-line flags. Every option is optional at the parser level so that
//! values missing on the command line can come from the config file before
//! falling back to the documented defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "grmkit", version, about = "Graphical representation models for asset returns")]
pub struct Cli {
    /// TOML file with defaults for any flag; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw (default 20240101).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to GRMKIT_THREADS, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a precision, factor or mixed model on a returns panel.
    Fit(FitArgs),
    /// Score fitted models on a held-out panel.
    Eval(EvalArgs),
    /// Export the partial-correlation graph of a model.
    Graph(GraphArgs),
    /// Detect Walktrap communities in a model's graph.
    Communities(CommunitiesArgs),
    /// Implied or factor betas, their dispersion and market volatility.
    Beta(BetaArgs),
    /// Rolling out-of-sample R² of a model recipe.
    Backtest(BacktestArgs),
    /// Generate a synthetic market from a JSON spec.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Glasso,
    Concord,
    Pca,
    Exogenous,
    Spatial,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BacktestMethod {
    Glasso,
    Concord,
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Graphml,
    Dot,
    Json,
}

/// Settings of the sparse precision solvers.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverArgs {
    /// Fixed penalty λ; conflicts with --cv.
    #[arg(long, conflicts_with = "cv")]
    pub lambda: Option<f64>,
    /// Choose λ by K-fold cross-validation (default 5 when --lambda is absent).
    #[arg(long)]
    pub cv: Option<usize>,
    /// Convergence tolerance (default 1e-6).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Maximum solver sweeps (default 500).
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// CONCORD Frobenius weight τ (default 0).
    #[arg(long)]
    pub frobenius_weight: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub method: Option<FitMethod>,
    /// Returns CSV (dates in the first column, one column per asset).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory for model.json and summary.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Factor returns CSV (exogenous, spatial and mixed methods).
    #[arg(long)]
    pub factors: Option<PathBuf>,
    /// Distance matrix CSV (spatial method).
    #[arg(long)]
    pub distances: Option<PathBuf>,
    /// Number of principal components (default 3).
    #[arg(long)]
    pub k: Option<usize>,
    /// Lower end of the ρ search (default −2).
    #[arg(long, allow_hyphen_values = true)]
    pub rho_min: Option<f64>,
    /// Upper end of the ρ search (default 4).
    #[arg(long, allow_hyphen_values = true)]
    pub rho_max: Option<f64>,
    /// Number of ρ grid points (default 601).
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    /// Model file written by `fit`; repeat to score several models.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// Held-out returns CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Held-out factor returns (needed by exogenous, spatial and mixed models).
    #[arg(long)]
    pub factors: Option<PathBuf>,
    /// Output directory for report.csv and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphArgs {
    /// Precision model file; conflicts with --pca-k.
    #[arg(long, conflicts_with = "pca_k")]
    pub model: Option<PathBuf>,
    /// Build the hard-thresholded PCA graph with this many components.
    #[arg(long, requires = "input")]
    pub pca_k: Option<usize>,
    /// Target edge count of the thresholded PCA graph (default 100).
    #[arg(long)]
    pub target_edges: Option<usize>,
    /// Returns CSV for the PCA graph.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Sector map CSV (symbol,sector) attached to vertices.
    #[arg(long)]
    pub sectors: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<ExportFormat>,
    /// Output file (default graph.<format>).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunitiesArgs {
    /// Precision model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of communities (default 11).
    #[arg(long)]
    pub k: Option<usize>,
    /// Random-walk length (default 4).
    #[arg(long)]
    pub walk_length: Option<usize>,
    /// Sector map CSV; adds the sector ratio matrix.
    #[arg(long)]
    pub sectors: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaArgs {
    /// Model file; repeat to compare betas across models.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// Returns CSV for the projected market volatility.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Factor returns CSV; the first factor gives the exogenous market volatility.
    #[arg(long)]
    pub factors: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestArgs {
    #[arg(long, value_enum)]
    pub method: Option<BacktestMethod>,
    /// Returns CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fitting window in observations (default 244).
    #[arg(long)]
    pub window: Option<usize>,
    /// Evaluation block and stride in observations (default 61).
    #[arg(long)]
    pub step: Option<usize>,
    /// Principal components of the PCA recipe (default 5).
    #[arg(long)]
    pub k: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// SyntheticSpec JSON; a missing `seed` is filled from --seed.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output returns CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON file for the population truth.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}
