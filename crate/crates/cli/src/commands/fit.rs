//! `grmkit fit`: estimate a model on an in-sample returns panel.

use std::fmt::Write as _;

use grmkit::factor::{fit_exogenous, fit_pca};
use grmkit::grm::build_grm;
use grmkit::interaction::{fit_mixed, spatial_weights, InteractionWeights, DEFAULT_BOUNDS, DEFAULT_GRID_SIZE};
use grmkit::panel::{load_distances, load_returns, PanelFormat};

use super::{factors_for, Context, SolverSetup};
use crate::args::{FitArgs, FitMethod};
use crate::error::{CliError, CliResult};
use crate::output::{optional_input, out_dir, require_input, write_json, write_text, Metadata, ModelFile, ModelPayload};

pub const DEFAULT_PCA_K: usize = 3;

fn method_label(m: FitMethod) -> &'static str {
    match m {
        FitMethod::Glasso => "glasso",
        FitMethod::Concord => "concord",
        FitMethod::Pca => "pca",
        FitMethod::Exogenous => "exogenous",
        FitMethod::Spatial => "spatial",
        FitMethod::Mixed => "mixed",
    }
}

pub fn run(ctx: &Context, args: FitArgs) -> CliResult<()> {
    let method = args
        .method
        .ok_or_else(|| CliError::Usage("--method is required".into()))?;
    let input = require_input(args.input.as_ref(), "input")?;
    let factors_path = optional_input(args.factors.as_ref())?;
    let distances_path = optional_input(args.distances.as_ref())?;
    let needs_factors = matches!(method, FitMethod::Exogenous | FitMethod::Spatial | FitMethod::Mixed);
    if needs_factors && factors_path.is_none() {
        return Err(CliError::Usage(format!("--factors is required for method {}", method_label(method))));
    }
    if method == FitMethod::Spatial && distances_path.is_none() {
        return Err(CliError::Usage("--distances is required for method spatial".into()));
    }
    let dir = out_dir(args.out.as_ref())?;

    let panel = load_returns(input, PanelFormat::WideCsv)?;
    let setup = SolverSetup::new(&args.solver, method == FitMethod::Concord);
    let bounds = (
        args.rho_min.unwrap_or(DEFAULT_BOUNDS.0),
        args.rho_max.unwrap_or(DEFAULT_BOUNDS.1),
    );
    let grid_size = args.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
    let mut summary = String::new();
    let _ = writeln!(summary, "method: {}", method_label(method));
    let _ = writeln!(summary, "input: {} ({} assets, {} observations)", input.display(), panel.n_assets(), panel.n_obs());

    let (model, cv) = match method {
        FitMethod::Glasso | FitMethod::Concord => {
            let (est, cv) = setup.estimate(&panel)?;
            describe_precision(&mut summary, &est, cv.as_ref());
            (ModelPayload::Precision(est), cv)
        }
        FitMethod::Pca => {
            let k = args.k.unwrap_or(DEFAULT_PCA_K);
            let model = fit_pca(&panel, k)?;
            let _ = writeln!(summary, "components: {k}");
            if let Some(ev) = &model.eigenvalues {
                let _ = writeln!(summary, "leading eigenvalues: {}", join(ev));
            }
            (ModelPayload::Factor(model), None)
        }
        FitMethod::Exogenous => {
            let factors = factors_for(factors_path.expect("checked"), &panel)?;
            let model = fit_exogenous(&panel, &factors)?;
            let _ = writeln!(summary, "factors: {}", model.factor_names.join(", "));
            (ModelPayload::Factor(model), None)
        }
        FitMethod::Spatial | FitMethod::Mixed => {
            let factors = factors_for(factors_path.expect("checked"), &panel)?;
            let (weights, cv) = if method == FitMethod::Spatial {
                let d = load_distances(distances_path.expect("checked"))?.reorder(panel.asset_ids())?;
                (spatial_weights(&d)?, None)
            } else {
                let (est, cv) = setup.estimate(&panel)?;
                describe_precision(&mut summary, &est, cv.as_ref());
                (InteractionWeights::from_grm(&build_grm(&est)?), cv)
            };
            let model = fit_mixed(&panel, &factors, &weights, bounds, grid_size)?;
            let _ = writeln!(summary, "factors: {}", model.factor_names.join(", "));
            let _ = writeln!(summary, "rho: {}", model.rho);
            let _ = writeln!(summary, "search bounds: [{}, {}] with {grid_size} grid points", bounds.0, bounds.1);
            (ModelPayload::Mixed(model), cv)
        }
    };

    let file = ModelFile {
        label: method_label(method).to_string(),
        model,
        cv,
        config: ctx.echo("fit", &args)?,
        metadata: Metadata::now(),
    };
    write_json(&dir.join("model.json"), &file)?;
    write_text(&dir.join("summary.txt"), &summary)?;
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn describe_precision(
    summary: &mut String,
    est: &grmkit::precision::PrecisionEstimate,
    cv: Option<&grmkit::precision::CvResult>,
) {
    if let Some(cv) = cv {
        let _ = writeln!(summary, "cross-validation: {} folds over {} penalties", cv.folds, cv.grid.len());
        let _ = writeln!(summary, "chosen lambda: {}", cv.best_lambda);
    } else {
        let _ = writeln!(summary, "lambda: {}", est.lambda);
    }
    let _ = writeln!(summary, "solver iterations: {} (converged: {})", est.iterations, est.converged);
    let _ = writeln!(summary, "KKT residual: {:e}", est.residual);
    let _ = writeln!(summary, "edges: {}", est.edges().len());
}
