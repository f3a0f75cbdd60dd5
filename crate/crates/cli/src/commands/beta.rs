//! `grmkit beta`: implied and estimated market betas.

use grmkit::beta::{
    angle_degrees, annualized_market_vol, beta_diagnostics, dispersion, BetaDiagnostics, BetaVector, MarketVolInput,
    TRADING_DAYS,
};
use grmkit::factor::{implied_factors, Normalization};
use grmkit::panel::{center, load_factors, load_returns, PanelFormat, ReturnsPanel};
use serde::Serialize;

use super::Context;
use crate::args::BetaArgs;
use crate::error::{CliError, CliResult};
use crate::output::{check_exists, csv_error, csv_writer, optional_input, out_dir, read_model, write_json, Envelope, Metadata, ModelFile, ModelPayload};

#[derive(Debug, Serialize)]
struct BetaEntry {
    label: String,
    beta: BetaVector,
    dispersion: f64,
    diagnostics: BetaDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    market_vol: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PairAngle {
    a: String,
    b: String,
    degrees: f64,
}

#[derive(Debug, Serialize)]
struct BetaResult {
    models: Vec<BetaEntry>,
    angles: Vec<PairAngle>,
    /// Volatility of the first exogenous factor, when factors were given.
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_market_vol: Option<f64>,
}

/// Mean-one market beta of a model file.
fn beta_of(m: &ModelFile) -> CliResult<BetaVector> {
    let raw = match &m.model {
        ModelPayload::Precision(est) => {
            let imp = implied_factors(est, 1, Normalization::MeanOne)?;
            return Ok(BetaVector::from_implied(&imp, &m.label));
        }
        ModelPayload::Factor(f) => BetaVector::raw(f.asset_ids.clone(), f.b.column(0).into_owned(), &m.label)?,
        ModelPayload::Mixed(mm) => BetaVector::raw(mm.asset_ids.clone(), mm.b.column(0).into_owned(), &m.label)?,
    };
    Ok(raw.mean_one()?)
}

pub fn run(ctx: &Context, args: BetaArgs) -> CliResult<()> {
    if args.models.is_empty() {
        return Err(CliError::Usage("at least one --model is required".into()));
    }
    for m in &args.models {
        check_exists(m)?;
    }
    let input = optional_input(args.input.as_ref())?;
    let factors_path = optional_input(args.factors.as_ref())?;
    let dir = out_dir(args.out.as_ref())?;

    let models = args.models.iter().map(|m| read_model(m)).collect::<CliResult<Vec<_>>>()?;
    let returns: Option<ReturnsPanel> = input
        .map(|p| load_returns(p, PanelFormat::WideCsv).map(|r| center(&r)))
        .transpose()?;
    let factor_market_vol = match factors_path {
        Some(path) => {
            let mut factors = load_factors(path)?;
            if let Some(r) = &returns {
                factors = factors.restrict_to(r)?;
            }
            let first: Vec<f64> = factors.values().row(0).iter().copied().collect();
            Some(annualized_market_vol(MarketVolInput::ExogenousFirstFactor { factor: &first }, TRADING_DAYS)?)
        }
        None => None,
    };

    let mut entries = Vec::with_capacity(models.len());
    for m in &models {
        let beta = beta_of(m)?;
        let market_vol = match &returns {
            Some(r) if factor_market_vol.is_none() => {
                if r.asset_ids() != beta.asset_ids.as_slice() {
                    return Err(grmkit::Error::AssetMismatch("beta and returns").into());
                }
                Some(annualized_market_vol(
                    MarketVolInput::Projected {
                        beta: &beta.values,
                        returns: r.values(),
                    },
                    TRADING_DAYS,
                )?)
            }
            _ => None,
        };
        entries.push(BetaEntry {
            label: m.label.clone(),
            dispersion: dispersion(&beta)?,
            diagnostics: beta_diagnostics(&beta),
            market_vol,
            beta,
        });
    }
    let mut angles = Vec::new();
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            angles.push(PairAngle {
                a: a.label.clone(),
                b: b.label.clone(),
                degrees: angle_degrees(&a.beta, &b.beta)?,
            });
        }
    }

    write_csv(&dir.join("beta.csv"), &entries)?;
    write_json(
        &dir.join("beta.json"),
        &Envelope {
            result: BetaResult {
                models: entries,
                angles,
                factor_market_vol,
            },
            config: ctx.echo("beta", &args)?,
            metadata: Metadata::now(),
        },
    )
}

/// One row per asset, one mean-one beta column per model.
fn write_csv(path: &std::path::Path, entries: &[BetaEntry]) -> CliResult<()> {
    let ids = &entries[0].beta.asset_ids;
    if entries.iter().any(|e| &e.beta.asset_ids != ids) {
        return Err(grmkit::Error::AssetMismatch("beta vectors").into());
    }
    let mut w = csv_writer(path)?;
    let mut header = vec!["asset_id".to_string()];
    header.extend(entries.iter().map(|e| e.label.clone()));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(entries.iter().map(|e| e.beta.values[i].to_string()));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
