//! `grmkit eval`: score fitted models on a held-out panel.

use std::collections::BTreeMap;

use grmkit::evaluation::{count_parameters, evaluate, write_reports_csv, EvalReport, ModelDescriptor, ModelKind};
use grmkit::factor::{predict_factor, FactorKind};
use grmkit::grm::{build_grm, predict};
use grmkit::interaction::{predict_mixed, WeightSource};
use grmkit::panel::{center, load_returns, FactorPanel, PanelFormat, ReturnsPanel};

use super::{factors_for, Context};
use crate::args::EvalArgs;
use crate::error::{CliError, CliResult};
use crate::output::{check_exists, optional_input, out_dir, read_model, require_input, write_json, Envelope, Metadata, ModelFile, ModelPayload};

pub fn run(ctx: &Context, args: EvalArgs) -> CliResult<()> {
    if args.models.is_empty() {
        return Err(CliError::Usage("at least one --model is required".into()));
    }
    for m in &args.models {
        check_exists(m)?;
    }
    let input = require_input(args.input.as_ref(), "input")?;
    let factors_path = optional_input(args.factors.as_ref())?;
    let models = args.models.iter().map(|m| read_model(m)).collect::<CliResult<Vec<_>>>()?;
    if factors_path.is_none() {
        if let Some(m) = models.iter().find(|m| needs_factors(m)) {
            return Err(CliError::Usage(format!("model {:?} needs --factors", m.label)));
        }
    }
    let dir = out_dir(args.out.as_ref())?;

    let actual = center(&load_returns(input, PanelFormat::WideCsv)?);
    let factors = factors_path.map(|p| factors_for(p, &actual)).transpose()?;
    let labels = unique_labels(&models);
    let reports = models
        .iter()
        .zip(&labels)
        .map(|(m, label)| score(m, label, &actual, factors.as_ref()))
        .collect::<CliResult<Vec<_>>>()?;

    let mut csv = Vec::new();
    write_reports_csv(&reports, &mut csv)?;
    let csv_path = dir.join("report.csv");
    std::fs::write(&csv_path, csv).map_err(|e| CliError::io(&csv_path, e))?;
    let mut sorted = reports;
    sorted.sort_by(|a, b| a.model_label.cmp(&b.model_label));
    write_json(
        &dir.join("report.json"),
        &Envelope {
            result: sorted,
            config: ctx.echo("eval", &args)?,
            metadata: Metadata::now(),
        },
    )
}

fn needs_factors(m: &ModelFile) -> bool {
    match &m.model {
        ModelPayload::Precision(_) => false,
        ModelPayload::Factor(f) => f.kind == FactorKind::Exogenous,
        ModelPayload::Mixed(_) => true,
    }
}

/// Model labels with `_2`, `_3`, ... appended to repeats.
fn unique_labels(models: &[ModelFile]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    models
        .iter()
        .map(|m| {
            let n = seen.entry(m.label.as_str()).or_insert(0);
            *n += 1;
            if *n == 1 {
                m.label.clone()
            } else {
                format!("{}_{}", m.label, n)
            }
        })
        .collect()
}

fn score(m: &ModelFile, label: &str, actual: &ReturnsPanel, factors: Option<&FactorPanel>) -> CliResult<EvalReport> {
    let p = actual.n_assets();
    let (predicted, desc) = match &m.model {
        ModelPayload::Precision(est) => {
            let grm = build_grm(est)?;
            let desc = ModelDescriptor {
                kind: ModelKind::Grm,
                p,
                k: 0,
                zeros: est.zero_count(),
            };
            (predict(&grm, actual)?, desc)
        }
        ModelPayload::Factor(f) => {
            let kind = match f.kind {
                FactorKind::Exogenous => ModelKind::Exogenous,
                FactorKind::Pca => ModelKind::Pca,
            };
            let desc = ModelDescriptor { kind, p, k: f.k, zeros: 0 };
            (predict_factor(f, actual, factors)?, desc)
        }
        ModelPayload::Mixed(mm) => {
            let factors = factors.ok_or(grmkit::Error::MissingFactors)?;
            let (kind, zeros) = match mm.weights.source {
                WeightSource::Spatial => (ModelKind::SpatialMixed, 0),
                WeightSource::GrmA => {
                    let w = &mm.weights.w;
                    let off_zeros = (0..w.nrows())
                        .flat_map(|i| (0..w.ncols()).map(move |j| (i, j)))
                        .filter(|&(i, j)| i != j && w[(i, j)] == 0.0)
                        .count();
                    (ModelKind::GrmMixed, off_zeros)
                }
            };
            let desc = ModelDescriptor {
                kind,
                p,
                k: mm.b.ncols(),
                zeros,
            };
            (predict_mixed(mm, actual, factors)?, desc)
        }
    };
    let kappa = count_parameters(&desc)?;
    Ok(evaluate(label, &predicted, actual, kappa)?)
}
