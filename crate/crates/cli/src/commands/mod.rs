//! Subcommand implementations.

mod backtest;
mod beta;
mod eval;
mod fit;
mod graph;
mod synth;

pub use backtest::run as backtest;
pub use beta::run as beta;
pub use eval::run as eval;
pub use fit::run as fit;
pub use graph::{run_communities as communities, run_graph as graph};
pub use synth::run as synth;

use std::path::Path;

use grmkit::covariance::{sample_covariance, Divisor};
use grmkit::panel::{center, load_factors, FactorPanel, ReturnsPanel};
use grmkit::precision::{cross_validate, default_grid, fit as fit_lambda, CvResult, PrecisionEstimate, Solver, SolverOptions};
use serde::Serialize;

use crate::args::SolverArgs;
use crate::error::{CliError, CliResult};

pub const DEFAULT_CV_FOLDS: usize = 5;

/// Settings shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub seed: u64,
    /// Whether `seed` came from the `--seed` flag rather than a default.
    pub seed_from_flag: bool,
}

impl Context {
    /// Configuration echo written into every output.
    pub fn echo<T: Serialize>(&self, command: &str, args: &T) -> CliResult<serde_json::Value> {
        Ok(serde_json::json!({
            "command": command,
            "seed": self.seed,
            "args": serde_json::to_value(args)?,
        }))
    }
}

/// How λ is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Fixed(f64),
    CrossValidate(usize),
}

pub struct SolverSetup {
    pub solver: Solver,
    pub opts: SolverOptions,
    pub selection: Selection,
}

impl SolverSetup {
    pub fn new(args: &SolverArgs, concord: bool) -> Self {
        let defaults = SolverOptions::default();
        let solver = if concord {
            Solver::Concord {
                frobenius_weight: args.frobenius_weight.unwrap_or(0.0),
            }
        } else {
            Solver::Glasso
        };
        let selection = match (args.lambda, args.cv) {
            (Some(l), _) => Selection::Fixed(l),
            (None, Some(k)) => Selection::CrossValidate(k),
            (None, None) => Selection::CrossValidate(DEFAULT_CV_FOLDS),
        };
        Self {
            solver,
            opts: SolverOptions {
                tol: args.tol.unwrap_or(defaults.tol),
                max_iter: args.max_iter.unwrap_or(defaults.max_iter),
            },
            selection,
        }
    }

    /// Estimates Ω on a panel, selecting λ as configured.
    pub fn estimate(&self, panel: &ReturnsPanel) -> grmkit::Result<(PrecisionEstimate, Option<CvResult>)> {
        let s = sample_covariance(&center(panel), Divisor::N)?;
        match self.selection {
            Selection::Fixed(lambda) => Ok((fit_lambda(&s, &self.solver, lambda, &self.opts)?, None)),
            Selection::CrossValidate(folds) => {
                let grid = default_grid(&s, &self.solver);
                let cv = cross_validate(panel, &self.solver, &grid, folds, &self.opts)?;
                let est = fit_lambda(&s, &self.solver, cv.best_lambda, &self.opts)?;
                Ok((est, Some(cv)))
            }
        }
    }
}

/// Loads a factor file restricted to the dates of `panel`.
pub fn factors_for(path: &Path, panel: &ReturnsPanel) -> CliResult<FactorPanel> {
    let factors = load_factors(path)?;
    factors.restrict_to(panel).map_err(CliError::from)
}
