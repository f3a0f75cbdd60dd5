//! TOML configuration and the flags > config > defaults precedence.
//!
//! A config file may set `seed` and `threads` at the top level and any
//! subcommand flag inside a table named after the subcommand:
//!
//! ```toml
//! seed = 7
//! [fit]
//! method = "glasso"
//! cv = 5
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::{
    BacktestArgs, BetaArgs, CommunitiesArgs, EvalArgs, FitArgs, GraphArgs, SolverArgs, SynthArgs,
};
use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 20240101;
pub const THREADS_ENV: &str = "GRMKIT_THREADS";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub fit: FitArgs,
    pub eval: EvalArgs,
    pub graph: GraphArgs,
    pub communities: CommunitiesArgs,
    pub beta: BetaArgs,
    pub backtest: BacktestArgs,
    pub synth: SynthArgs,
}

pub fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Thread count from the flag, the config, then the environment.
pub fn resolve_threads(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag.or(config) {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Fills options missing on the command line from the config.
pub trait Merge {
    fn merge(self, config: Self) -> Self;
}

fn paths(flag: Vec<PathBuf>, config: Vec<PathBuf>) -> Vec<PathBuf> {
    if flag.is_empty() {
        config
    } else {
        flag
    }
}

impl Merge for SolverArgs {
    fn merge(self, c: Self) -> Self {
        // λ and the CV fold count select one mode, so they travel together.
        let (lambda, cv) = if self.lambda.is_some() || self.cv.is_some() {
            (self.lambda, self.cv)
        } else {
            (c.lambda, c.cv)
        };
        Self {
            lambda,
            cv,
            tol: self.tol.or(c.tol),
            max_iter: self.max_iter.or(c.max_iter),
            frobenius_weight: self.frobenius_weight.or(c.frobenius_weight),
        }
    }
}

impl Merge for FitArgs {
    fn merge(self, c: Self) -> Self {
        Self {
            method: self.method.or(c.method),
            input: self.input.or(c.input),
            out: self.out.or(c.out),
            factors: self.factors.or(c.factors),
            distances: self.distances.or(c.distances),
            k: self.k.or(c.k),
            rho_min: self.rho_min.or(c.rho_min),
            rho_max: self.rho_max.or(c.rho_max),
            grid_size: self.grid_size.or(c.grid_size),
            solver: self.solver.merge(c.solver),
        }
    }
}

impl Merge for EvalArgs {
    fn merge(self, c: Self) -> Self {
        Self {
            models: paths(self.models, c.models),
            input: self.input.or(c.input),
            factors: self.factors.or(c.factors),
            out: self.out.or(c.out),
        }
    }
}

impl Merge for GraphArgs {
    fn merge(self, c: Self) -> Self {
        let (model, pca_k) = if self.model.is_some() || self.pca_k.is_some() {
            (self.model, self.pca_k)
        } else {
            (c.model, c.pca_k)
        };
        Self {
            model,
            pca_k,
            target_edges: self.target_edges.or(c.target_edges),
            input: self.input.or(c.input),
            sectors: self.sectors.or(c.sectors),
            format: self.format.or(c.format),
            out: self.out.or(c.out),
        }
    }
}

impl Merge for CommunitiesArgs {
    fn merge(self, c: Self) -> Self {
        Self {
            model: self.model.or(c.model),
            k: self.k.or(c.k),
            walk_length: self.walk_length.or(c.walk_length),
            sectors: self.sectors.or(c.sectors),
            out: self.out.or(c.out),
        }
    }
}

impl Merge for BetaArgs {
    fn merge(self, c: Self) -> Self {
        Self {
            models: paths(self.models, c.models),
            input: self.input.or(c.input),
            factors: self.factors.or(c.factors),
            out: self.out.or(c.out),
        }
    }
}

impl Merge for BacktestArgs {
    fn merge(self, c: Self) -> Self {
        Self {
            method: self.method.or(c.method),
            input: self.input.or(c.input),
            window: self.window.or(c.window),
            step: self.step.or(c.step),
            k: self.k.or(c.k),
            out: self.out.or(c.out),
            solver: self.solver.merge(c.solver),
        }
    }
}

impl Merge for SynthArgs {
    fn merge(self, c: Self) -> Self {
        Self {
            spec: self.spec.or(c.spec),
            out: self.out.or(c.out),
            truth: self.truth.or(c.truth),
        }
    }
}
