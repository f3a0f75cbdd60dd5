//! `grmkit synth`: draw a synthetic returns panel from a JSON spec.

use std::path::PathBuf;

use grmkit::panel::write_returns;
use grmkit::synth::{generate, SyntheticSpec, SyntheticTruth};
use nalgebra::DMatrix;
use serde::Serialize;

use super::Context;
use crate::args::SynthArgs;
use crate::error::{CliError, CliResult};
use crate::output::{require_input, write_json, Envelope, Metadata};

#[derive(Debug, Serialize)]
struct TruthFile {
    spec: SyntheticSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<Vec<Vec<f64>>>,
    sigma: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<f64>>,
    /// Realized factor series, one row per factor.
    #[serde(skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<Vec<f64>>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TruthFile {
    fn new(spec: SyntheticSpec, t: &SyntheticTruth) -> Self {
        Self {
            spec,
            omega: t.omega.as_ref().map(rows),
            sigma: rows(&t.sigma),
            b: t.b.as_ref().map(rows),
            v: t.v.as_ref().map(rows),
            delta: t.delta.as_ref().map(|d| d.iter().copied().collect()),
            factors: t.factors.as_ref().map(|f| rows(f.values())),
        }
    }
}

/// Parses the spec, seeding it from `--seed` when given and otherwise
/// keeping its own seed, falling back to the resolved default.
fn read_spec(ctx: &Context, text: &str, path: &std::path::Path) -> CliResult<SyntheticSpec> {
    let bad = |message: String| CliError::BadFile {
        path: path.to_path_buf(),
        message,
    };
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| bad("spec must be a JSON object".into()))?;
    if ctx.seed_from_flag || !obj.contains_key("seed") {
        obj.insert("seed".into(), ctx.seed.into());
    }
    serde_json::from_value(value).map_err(|e| bad(format!("invalid spec: {e}")))
}

pub fn run(ctx: &Context, args: SynthArgs) -> CliResult<()> {
    let spec_path = require_input(args.spec.as_ref(), "spec")?;
    let text = std::fs::read_to_string(spec_path).map_err(|e| CliError::io(spec_path, e))?;
    let spec = read_spec(ctx, &text, spec_path)?;
    let market = generate(&spec)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("synth.csv"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    write_returns(&market.panel, &out)?;
    if let Some(truth) = &args.truth {
        write_json(
            truth,
            &Envelope {
                result: TruthFile::new(spec, &market.truth),
                config: ctx.echo("synth", &args)?,
                metadata: Metadata::now(),
            },
        )?;
    }
    Ok(())
}
