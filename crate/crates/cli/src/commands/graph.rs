//! `grmkit graph` and `grmkit communities`: partial-correlation networks.

use std::path::{Path, PathBuf};

use grmkit::covariance::{sample_covariance, Divisor};
use grmkit::graph::{
    ratio_matrix, render_graph, threshold_pca_graph, walktrap, CommunityPartition, GraphFormat, Grouping,
    PartialCorrelationGraph, SectorRatioMatrix, DEFAULT_WALK_LENGTH,
};
use grmkit::panel::{center, load_returns, load_sectors, PanelFormat, SectorMap};
use serde::Serialize;

use super::Context;
use crate::args::{CommunitiesArgs, ExportFormat, GraphArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv_error, csv_writer, optional_input, out_dir, read_model, require_input, write_json, write_text, Envelope, Metadata, ModelPayload};

pub const DEFAULT_TARGET_EDGES: usize = 100;
pub const DEFAULT_COMMUNITIES: usize = 11;

fn format_of(f: ExportFormat) -> (GraphFormat, &'static str) {
    match f {
        ExportFormat::Graphml => (GraphFormat::Graphml, "graphml"),
        ExportFormat::Dot => (GraphFormat::Dot, "dot"),
        ExportFormat::Json => (GraphFormat::Json, "json"),
    }
}

/// Graph of a precision model file.
fn graph_from_model(path: &Path) -> CliResult<PartialCorrelationGraph> {
    match read_model(path)?.model {
        ModelPayload::Precision(est) => Ok(PartialCorrelationGraph::from_precision(&est)?),
        _ => Err(CliError::Usage(format!(
            "{} is not a precision model; graphs need a glasso or concord fit",
            path.display()
        ))),
    }
}

fn sectors(path: Option<&Path>) -> CliResult<Option<SectorMap>> {
    Ok(path.map(load_sectors).transpose()?)
}

pub fn run_graph(ctx: &Context, args: GraphArgs) -> CliResult<()> {
    let sector_path = optional_input(args.sectors.as_ref())?;
    let graph = match (&args.model, args.pca_k) {
        (Some(model), None) => {
            let model = require_input(Some(model), "model")?;
            graph_from_model(model)?
        }
        (None, Some(k)) => {
            let input = require_input(args.input.as_ref(), "input")?;
            let panel = load_returns(input, PanelFormat::WideCsv)?;
            let s = sample_covariance(&center(&panel), Divisor::N)?;
            threshold_pca_graph(&s, k, args.target_edges.unwrap_or(DEFAULT_TARGET_EDGES))?
        }
        _ => return Err(CliError::Usage("exactly one of --model or --pca-k is required".into())),
    };
    let sectors = sectors(sector_path)?;
    let (format, ext) = format_of(args.format.unwrap_or(ExportFormat::Graphml));
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("graph.{ext}")));
    let text = render_graph(&graph, None, sectors.as_ref(), format)?;
    write_text(&out, &text)?;
    // JSON graphs are self-describing; the other formats get the config echo beside them.
    if format != GraphFormat::Json {
        let summary = GraphSummary {
            vertices: graph.n_vertices(),
            edges: graph.n_edges(),
            threshold: graph.threshold,
            file: out.display().to_string(),
        };
        write_json(
            &out.with_extension(format!("{ext}.json")),
            &Envelope {
                result: summary,
                config: ctx.echo("graph", &args)?,
                metadata: Metadata::now(),
            },
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct GraphSummary {
    vertices: usize,
    edges: usize,
    threshold: Option<f64>,
    file: String,
}

#[derive(Debug, Serialize)]
struct CommunityResult {
    partition: CommunityPartition,
    community_ratio: SectorRatioMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    sector_ratio: Option<SectorRatioMatrix>,
}

pub fn run_communities(ctx: &Context, args: CommunitiesArgs) -> CliResult<()> {
    let model = require_input(args.model.as_ref(), "model")?;
    let sector_path = optional_input(args.sectors.as_ref())?;
    let dir = out_dir(args.out.as_ref())?;
    let graph = graph_from_model(model)?;
    let sectors = sectors(sector_path)?;
    let k = args.k.unwrap_or(DEFAULT_COMMUNITIES);
    let walk_length = args.walk_length.unwrap_or(DEFAULT_WALK_LENGTH);
    if k > graph.n_vertices() {
        return Err(CliError::Usage(format!("--k {k} exceeds the {} assets", graph.n_vertices())));
    }
    let partition = walktrap(&graph, walk_length, k)?;
    let community_ratio = ratio_matrix(&graph, Grouping::Communities(&partition))?;
    let sector_ratio = sectors
        .as_ref()
        .map(|s| ratio_matrix(&graph, Grouping::Sectors(s)))
        .transpose()?;

    let csv_path = dir.join("communities.csv");
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["asset_id", "community"]).map_err(|e| csv_error(&csv_path, e))?;
    for (id, label) in partition.asset_ids.iter().zip(&partition.labels) {
        w.write_record([id.as_str(), &label.to_string()])
            .map_err(|e| csv_error(&csv_path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;

    write_json(
        &dir.join("communities.json"),
        &Envelope {
            result: CommunityResult {
                partition,
                community_ratio,
                sector_ratio,
            },
            config: ctx.echo("communities", &args)?,
            metadata: Metadata::now(),
        },
    )
}
