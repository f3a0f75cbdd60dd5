//! `grmkit`: command-line entry point.

mod args;
mod commands;
mod config;
mod error;
mod output;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use config::{Merge, DEFAULT_SEED};
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    let cfg = config::load(cli.config.as_deref())?;
    if let Some(n) = config::resolve_threads(cli.threads, cfg.threads)? {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    let ctx = Context {
        seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        seed_from_flag: cli.seed.is_some(),
    };
    match cli.command {
        Command::Fit(a) => commands::fit(&ctx, a.merge(cfg.fit)),
        Command::Eval(a) => commands::eval(&ctx, a.merge(cfg.eval)),
        Command::Graph(a) => commands::graph(&ctx, a.merge(cfg.graph)),
        Command::Communities(a) => commands::communities(&ctx, a.merge(cfg.communities)),
        Command::Beta(a) => commands::beta(&ctx, a.merge(cfg.beta)),
        Command::Backtest(a) => commands::backtest(&ctx, a.merge(cfg.backtest)),
        Command::Synth(a) => commands::synth(&ctx, a.merge(cfg.synth)),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
