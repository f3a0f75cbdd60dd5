//! Partial-correlation graphs of a market.
//!
//! Vertices are assets and an edge joins two assets whose estimated partial
//! correlation `ϱ̂_ij = −ω̂_ij/√(ω̂_ii ω̂_jj)` is nonzero. The submodules build
//! the hard-thresholded PCA comparison graph, detect communities with
//! Walktrap, tabulate positive/negative edges between groups and export
//! graphs for external viewers.

mod export;
mod ratio;
mod threshold;
mod walktrap;

pub use export::{export_graph, import_graph_json, render_graph, GraphFormat};
pub use ratio::{ratio_matrix, Grouping, SectorRatioMatrix};
pub use threshold::{pca_plugin_precision, threshold_pca_graph};
pub use walktrap::{walktrap, CommunityPartition, Merge, DEFAULT_WALK_LENGTH};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{PrecisionEstimate, PrecisionMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Glasso,
    Concord,
    PcaThreshold,
    ExactInverse,
}

impl From<PrecisionMethod> for GraphSource {
    fn from(m: PrecisionMethod) -> Self {
        match m {
            PrecisionMethod::Glasso => GraphSource::Glasso,
            PrecisionMethod::Concord => GraphSource::Concord,
            PrecisionMethod::PcaPlugin => GraphSource::PcaThreshold,
            PrecisionMethod::ExactInverse => GraphSource::ExactInverse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// Partial correlation of the pair.
    pub weight: f64,
}

/// Undirected graph with edges sorted by `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialCorrelationGraph {
    pub asset_ids: Vec<String>,
    pub edges: Vec<Edge>,
    pub source: GraphSource,
    /// Hard threshold γ when the graph came from thresholding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl PartialCorrelationGraph {
    /// Validates indices, orientation, weights and uniqueness; sorts edges.
    pub fn new(asset_ids: Vec<String>, mut edges: Vec<Edge>, source: GraphSource) -> Result<Self> {
        let p = asset_ids.len();
        for e in &edges {
            if e.i >= e.j || e.j >= p {
                return Err(Error::InvalidParameter(format!("edge ({}, {}) is not a pair i < j < {p}", e.i, e.j)));
            }
            if e.weight == 0.0 || !e.weight.is_finite() || e.weight.abs() > 1.0 + 1e-8 {
                return Err(Error::InvalidParameter(format!(
                    "edge ({}, {}) has weight {} outside 0 < |ϱ| ≤ 1",
                    e.i, e.j, e.weight
                )));
            }
        }
        edges.sort_by_key(|e| (e.i, e.j));
        if edges.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::InvalidParameter("duplicate edge".into()));
        }
        Ok(Self {
            asset_ids,
            edges,
            source,
            threshold: None,
        })
    }

    /// Graph of the nonzero off-diagonal entries of a partial correlation
    /// matrix.
    pub fn from_matrix(asset_ids: Vec<String>, pcor: &DMatrix<f64>, source: GraphSource) -> Result<Self> {
        let p = pcor.nrows();
        let mut edges = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                let w = pcor[(i, j)];
                if w != 0.0 {
                    edges.push(Edge { i, j, weight: w });
                }
            }
        }
        Self::new(asset_ids, edges, source)
    }

    /// Graph of an estimated precision matrix.
    pub fn from_precision(omega: &PrecisionEstimate) -> Result<Self> {
        let pcor = partial_correlation_matrix(omega)?;
        Self::from_matrix(omega.asset_ids.clone(), &pcor, omega.method.into())
    }

    pub fn n_vertices(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Neighbor lists, sorted.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices()];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }
}

/// `P̂ = −D̂^{1/2} Ω̂ D̂^{1/2}` off the diagonal with `D̂ = diag(Ω̂)⁻¹`; the
/// diagonal is set to zero.
pub fn partial_correlation_matrix(omega: &PrecisionEstimate) -> Result<DMatrix<f64>> {
    let w = &omega.omega;
    let p = w.nrows();
    for i in 0..p {
        if !(w[(i, i)] > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i, value: w[(i, i)] });
        }
    }
    Ok(DMatrix::from_fn(p, p, |i, j| {
        if i == j || w[(i, j)] == 0.0 {
            0.0
        } else {
            -w[(i, j)] / (w[(i, i)] * w[(j, j)]).sqrt()
        }
    }))
}
