//! `grmkit backtest`: rolling out-of-sample explained variance.

use grmkit::evaluation::{rolling_backtest, BacktestPeriod, Predictor};
use grmkit::factor::{fit_pca, predict_factor};
use grmkit::grm::{build_grm, predict};
use grmkit::panel::{load_returns, PanelFormat, ReturnsPanel};
use serde::Serialize;

use super::{Context, SolverSetup};
use crate::args::{BacktestArgs, BacktestMethod};
use crate::error::{CliError, CliResult};
use crate::output::{csv_error, csv_writer, out_dir, require_input, write_json, Envelope, Metadata};

pub const DEFAULT_WINDOW: usize = 244;
pub const DEFAULT_STEP: usize = 61;
pub const DEFAULT_PCA_K: usize = 5;

#[derive(Debug, Serialize)]
struct BacktestResult {
    periods: Vec<BacktestPeriod>,
    mean_r2: f64,
}

pub fn run(ctx: &Context, args: BacktestArgs) -> CliResult<()> {
    let method = args
        .method
        .ok_or_else(|| CliError::Usage("--method is required".into()))?;
    let input = require_input(args.input.as_ref(), "input")?;
    let dir = out_dir(args.out.as_ref())?;
    let window = args.window.unwrap_or(DEFAULT_WINDOW);
    let step = args.step.unwrap_or(DEFAULT_STEP);
    let panel = load_returns(input, PanelFormat::WideCsv)?;

    let periods = match method {
        BacktestMethod::Pca => {
            let k = args.k.unwrap_or(DEFAULT_PCA_K);
            let recipe = |train: &ReturnsPanel| -> grmkit::Result<Box<dyn Predictor>> {
                let model = fit_pca(train, k)?;
                Ok(Box::new(move |o: &ReturnsPanel| predict_factor(&model, o, None)))
            };
            rolling_backtest(&panel, recipe, window, step)?
        }
        BacktestMethod::Glasso | BacktestMethod::Concord => {
            let setup = SolverSetup::new(&args.solver, method == BacktestMethod::Concord);
            let recipe = |train: &ReturnsPanel| -> grmkit::Result<Box<dyn Predictor>> {
                let (est, _) = setup.estimate(train)?;
                let grm = build_grm(&est)?;
                Ok(Box::new(move |o: &ReturnsPanel| predict(&grm, o)))
            };
            rolling_backtest(&panel, recipe, window, step)?
        }
    };
    let mean_r2 = periods.iter().map(|p| p.r2_mean).sum::<f64>() / periods.len().max(1) as f64;

    let csv_path = dir.join("backtest.csv");
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["period", "fit_start", "eval_start", "eval_end", "r2_mean"])
        .map_err(|e| csv_error(&csv_path, e))?;
    for p in &periods {
        w.write_record([
            p.period.to_string(),
            p.fit_start.to_string(),
            p.eval_start.to_string(),
            p.eval_end.to_string(),
            p.r2_mean.to_string(),
        ])
        .map_err(|e| csv_error(&csv_path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;

    write_json(
        &dir.join("backtest.json"),
        &Envelope {
            result: BacktestResult { periods, mean_r2 },
            config: ctx.echo("backtest", &args)?,
            metadata: Metadata::now(),
        },
    )
}
