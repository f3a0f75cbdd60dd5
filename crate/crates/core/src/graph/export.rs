//! GraphML, DOT and JSON serialization of partial-correlation graphs.
//!
//! Every edge carries `weight` (the partial correlation), `sign`
//! (`positive` or `negative`), `color` (`blue` for positive, `red` for
//! negative) and `width` (proportional to `|ϱ̂|`). Vertices carry
//! `community` and `sector` when those are supplied. Vertices appear in
//! asset order and edges in `(i, j)` order, so output is byte-stable.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CommunityPartition, Edge, GraphSource, PartialCorrelationGraph};
use crate::error::{Error, Result};
use crate::panel::SectorMap;

/// Edge width per unit of `|ϱ̂|`.
const WIDTH_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFormat {
    Graphml,
    Dot,
    Json,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(GraphFormat::Graphml),
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonVertex {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    community: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sector: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonEdge {
    source: String,
    target: String,
    weight: f64,
    sign: String,
    color: String,
    width: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonGraph {
    source: GraphSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    vertices: Vec<JsonVertex>,
    edges: Vec<JsonEdge>,
}

struct EdgeStyle {
    sign: &'static str,
    color: &'static str,
    width: f64,
}

fn style(e: &Edge) -> EdgeStyle {
    let positive = e.weight > 0.0;
    EdgeStyle {
        sign: if positive { "positive" } else { "negative" },
        color: if positive { "blue" } else { "red" },
        width: WIDTH_SCALE * e.weight.abs(),
    }
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn vertex_attributes(
    graph: &PartialCorrelationGraph,
    partition: Option<&CommunityPartition>,
    sectors: Option<&SectorMap>,
) -> Result<Vec<(Option<usize>, Option<String>)>> {
    if let Some(part) = partition {
        if part.asset_ids != graph.asset_ids {
            return Err(Error::AssetMismatch("graph and community partition"));
        }
    }
    Ok(graph
        .asset_ids
        .iter()
        .enumerate()
        .map(|(v, id)| {
            (
                partition.map(|p| p.labels[v]),
                sectors.and_then(|s| s.get(id)).map(str::to_string),
            )
        })
        .collect())
}

/// Serializes the graph to a string in the requested format.
pub fn render_graph(
    graph: &PartialCorrelationGraph,
    partition: Option<&CommunityPartition>,
    sectors: Option<&SectorMap>,
    format: GraphFormat,
) -> Result<String> {
    let attrs = vertex_attributes(graph, partition, sectors)?;
    let ids = &graph.asset_ids;
    let mut out = String::new();
    match format {
        GraphFormat::Graphml => {
            out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
            out.push_str("  <key id=\"community\" for=\"node\" attr.name=\"community\" attr.type=\"int\"/>\n");
            out.push_str("  <key id=\"sector\" for=\"node\" attr.name=\"sector\" attr.type=\"string\"/>\n");
            out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
            out.push_str("  <key id=\"sign\" for=\"edge\" attr.name=\"sign\" attr.type=\"string\"/>\n");
            out.push_str("  <key id=\"color\" for=\"edge\" attr.name=\"color\" attr.type=\"string\"/>\n");
            out.push_str("  <key id=\"width\" for=\"edge\" attr.name=\"width\" attr.type=\"double\"/>\n");
            out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
            for (id, (community, sector)) in ids.iter().zip(&attrs) {
                let _ = write!(out, "    <node id=\"{}\">", escape_xml(id));
                if let Some(c) = community {
                    let _ = write!(out, "<data key=\"community\">{c}</data>");
                }
                if let Some(s) = sector {
                    let _ = write!(out, "<data key=\"sector\">{}</data>", escape_xml(s));
                }
                out.push_str("</node>\n");
            }
            for e in &graph.edges {
                let st = style(e);
                let _ = writeln!(
                    out,
                    "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{}</data><data key=\"sign\">{}</data><data key=\"color\">{}</data><data key=\"width\">{}</data></edge>",
                    escape_xml(&ids[e.i]),
                    escape_xml(&ids[e.j]),
                    e.weight,
                    st.sign,
                    st.color,
                    st.width
                );
            }
            out.push_str("  </graph>\n</graphml>\n");
        }
        GraphFormat::Dot => {
            out.push_str("graph G {\n");
            for (id, (community, sector)) in ids.iter().zip(&attrs) {
                let mut parts = Vec::new();
                if let Some(c) = community {
                    parts.push(format!("community={c}"));
                }
                if let Some(s) = sector {
                    parts.push(format!("sector=\"{}\"", escape_dot(s)));
                }
                if parts.is_empty() {
                    let _ = writeln!(out, "  \"{}\";", escape_dot(id));
                } else {
                    let _ = writeln!(out, "  \"{}\" [{}];", escape_dot(id), parts.join(", "));
                }
            }
            for e in &graph.edges {
                let st = style(e);
                let _ = writeln!(
                    out,
                    "  \"{}\" -- \"{}\" [weight={}, sign=\"{}\", color=\"{}\", penwidth={}];",
                    escape_dot(&ids[e.i]),
                    escape_dot(&ids[e.j]),
                    e.weight,
                    st.sign,
                    st.color,
                    st.width
                );
            }
            out.push_str("}\n");
        }
        GraphFormat::Json => {
            let doc = JsonGraph {
                source: graph.source,
                threshold: graph.threshold,
                vertices: ids
                    .iter()
                    .zip(attrs)
                    .map(|(id, (community, sector))| JsonVertex {
                        id: id.clone(),
                        community,
                        sector,
                    })
                    .collect(),
                edges: graph
                    .edges
                    .iter()
                    .map(|e| {
                        let st = style(e);
                        JsonEdge {
                            source: ids[e.i].clone(),
                            target: ids[e.j].clone(),
                            weight: e.weight,
                            sign: st.sign.to_string(),
                            color: st.color.to_string(),
                            width: st.width,
                        }
                    })
                    .collect(),
            };
            out = serde_json::to_string_pretty(&doc)?;
            out.push('\n');
        }
    }
    Ok(out)
}

/// Writes the rendered graph to `path`.
pub fn export_graph(
    graph: &PartialCorrelationGraph,
    partition: Option<&CommunityPartition>,
    sectors: Option<&SectorMap>,
    format: GraphFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = render_graph(graph, partition, sectors, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a graph written in the JSON format.
pub fn import_graph_json(text: &str) -> Result<PartialCorrelationGraph> {
    let doc: JsonGraph = serde_json::from_str(text)?;
    let ids: Vec<String> = doc.vertices.into_iter().map(|v| v.id).collect();
    let index = |name: &str| -> Result<usize> {
        ids.iter()
            .position(|id| id == name)
            .ok_or_else(|| Error::InvalidParameter(format!("edge endpoint {name} is not a vertex")))
    };
    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in &doc.edges {
        let (a, b) = (index(&e.source)?, index(&e.target)?);
        edges.push(Edge {
            i: a.min(b),
            j: a.max(b),
            weight: e.weight,
        });
    }
    let mut graph = PartialCorrelationGraph::new(ids, edges, doc.source)?;
    graph.threshold = doc.threshold;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> PartialCorrelationGraph {
        PartialCorrelationGraph::new(
            vec!["AAA".into(), "B&B".into()],
            vec![Edge { i: 0, j: 1, weight: -0.25 }],
            GraphSource::Glasso,
        )
        .unwrap()
    }

    #[test]
    fn graphml_has_one_colored_edge() {
        let text = render_graph(&two_node(), None, None, GraphFormat::Graphml).unwrap();
        assert_eq!(text.matches("<edge ").count(), 1);
        assert!(text.contains("<data key=\"color\">red</data>"));
        assert!(text.contains("<data key=\"sign\">negative</data>"));
        assert!(text.contains("B&amp;B"));
    }

    #[test]
    fn empty_graph_lists_vertices_only() {
        let g = PartialCorrelationGraph::new(crate::panel::default_ids(3), vec![], GraphSource::Concord).unwrap();
        let text = render_graph(&g, None, None, GraphFormat::Graphml).unwrap();
        assert_eq!(text.matches("<node ").count(), 3);
        assert_eq!(text.matches("<edge ").count(), 0);
        let dot = render_graph(&g, None, None, GraphFormat::Dot).unwrap();
        assert!(!dot.contains("--"));
    }

    #[test]
    fn json_round_trip_with_communities() {
        let g = two_node();
        let part = CommunityPartition {
            asset_ids: g.asset_ids.clone(),
            labels: vec![1, 2],
            k: 2,
            merge_trace: vec![],
        };
        let text = render_graph(&g, Some(&part), None, GraphFormat::Json).unwrap();
        assert!(text.contains("\"community\": 2"));
        assert_eq!(import_graph_json(&text).unwrap(), g);
        let dot = render_graph(&g, Some(&part), None, GraphFormat::Dot).unwrap();
        assert!(dot.contains("color=\"red\""));
        assert!(dot.contains("community=1"));
    }

    #[test]
    fn export_writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.dot");
        export_graph(&two_node(), None, None, GraphFormat::Dot, &path).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("graph G {"));
        let bad = dir.path().join("missing").join("g.dot");
        assert!(matches!(export_graph(&two_node(), None, None, GraphFormat::Dot, bad), Err(Error::Io { .. })));
    }
}
