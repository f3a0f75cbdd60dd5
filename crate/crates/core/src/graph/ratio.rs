//! Positive-to-negative edge ratios between groups of assets.
//!
//! `C⁺_ab` and `C⁻_ab` count the positive and negative edges with one
//! endpoint in group a and the other in group b. Each undirected edge is
//! counted once for its unordered group pair and stored symmetrically.
//! `φ_ab = ln((C⁺_ab + 1)/(C⁻_ab + 1))`, and `φ̃` divides φ by its largest
//! entry when that entry is positive.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CommunityPartition, PartialCorrelationGraph};
use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::SectorMap;

#[derive(Debug, Clone, Copy)]
pub enum Grouping<'a> {
    Sectors(&'a SectorMap),
    Communities(&'a CommunityPartition),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRatioMatrix {
    pub group_labels: Vec<String>,
    #[serde(with = "linalg::rows")]
    pub phi: DMatrix<f64>,
    #[serde(with = "linalg::rows")]
    pub phi_scaled: DMatrix<f64>,
    pub counts_pos: Vec<Vec<usize>>,
    pub counts_neg: Vec<Vec<usize>>,
}

/// Group index of every vertex and the ordered group labels.
fn assign_groups(graph: &PartialCorrelationGraph, grouping: Grouping<'_>) -> Result<(Vec<usize>, Vec<String>)> {
    match grouping {
        Grouping::Sectors(map) => {
            let mut names = Vec::with_capacity(graph.n_vertices());
            for id in &graph.asset_ids {
                names.push(map.get(id).ok_or_else(|| Error::UncoveredVertex(id.clone()))?.to_string());
            }
            let mut labels = names.clone();
            labels.sort();
            labels.dedup();
            let index = names
                .iter()
                .map(|n| labels.binary_search(n).expect("label present"))
                .collect();
            Ok((index, labels))
        }
        Grouping::Communities(part) => {
            if part.asset_ids != graph.asset_ids {
                if let Some(id) = graph.asset_ids.iter().find(|id| !part.asset_ids.contains(id)) {
                    return Err(Error::UncoveredVertex(id.clone()));
                }
                return Err(Error::AssetMismatch("graph and community partition"));
            }
            let labels = (1..=part.k).map(|l| l.to_string()).collect();
            Ok((part.labels.iter().map(|l| l - 1).collect(), labels))
        }
    }
}

pub fn ratio_matrix(graph: &PartialCorrelationGraph, grouping: Grouping<'_>) -> Result<SectorRatioMatrix> {
    let (group, labels) = assign_groups(graph, grouping)?;
    let g = labels.len();
    let mut pos = vec![vec![0usize; g]; g];
    let mut neg = vec![vec![0usize; g]; g];
    for e in &graph.edges {
        let (a, b) = (group[e.i], group[e.j]);
        let target = if e.weight > 0.0 { &mut pos } else { &mut neg };
        target[a][b] += 1;
        if a != b {
            target[b][a] += 1;
        }
    }
    let phi = DMatrix::from_fn(g, g, |a, b| ((pos[a][b] as f64 + 1.0) / (neg[a][b] as f64 + 1.0)).ln());
    let max = phi.max();
    let phi_scaled = if g > 0 && max > 0.0 { &phi / max } else { phi.clone() };
    Ok(SectorRatioMatrix {
        group_labels: labels,
        phi,
        phi_scaled,
        counts_pos: pos,
        counts_neg: neg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GraphSource};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn graph(p: usize, edges: &[(usize, usize, f64)]) -> PartialCorrelationGraph {
        let edges = edges.iter().map(|&(i, j, weight)| Edge { i, j, weight }).collect();
        PartialCorrelationGraph::new(crate::panel::default_ids(p), edges, GraphSource::Glasso).unwrap()
    }

    fn sectors(labels: &[&str]) -> SectorMap {
        let ids = crate::panel::default_ids(labels.len());
        SectorMap::new(ids.into_iter().zip(labels.iter().map(|s| s.to_string())).collect::<BTreeMap<_, _>>())
    }

    #[test]
    fn single_group_all_positive() {
        let g = graph(4, &[(0, 1, 0.2), (1, 2, 0.3), (2, 3, 0.1)]);
        let map = sectors(&["X", "X", "X", "X"]);
        let r = ratio_matrix(&g, Grouping::Sectors(&map)).unwrap();
        assert!((r.phi[(0, 0)] - 4f64.ln()).abs() < 1e-15);
        assert_eq!(r.phi_scaled[(0, 0)], 1.0);
    }

    #[test]
    fn nine_positive_four_negative_between_groups() {
        // Group G1 = {0,1,2,3}, G2 = {4,...,7}: 16 cross pairs, use 13.
        let mut edges = Vec::new();
        for (n, (i, j)) in (0..4).flat_map(|i| (4..8).map(move |j| (i, j))).take(13).enumerate() {
            edges.push((i, j, if n < 9 { 0.1 } else { -0.1 }));
        }
        let g = graph(8, &edges);
        let map = sectors(&["G1", "G1", "G1", "G1", "G2", "G2", "G2", "G2"]);
        let r = ratio_matrix(&g, Grouping::Sectors(&map)).unwrap();
        assert_eq!((r.counts_pos[0][1], r.counts_neg[1][0]), (9, 4));
        assert!((r.phi[(0, 1)] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.phi[(0, 0)], 0.0);
    }

    #[test]
    fn balanced_and_uncovered() {
        let g = graph(3, &[(0, 1, 0.1), (1, 2, -0.1)]);
        let map = sectors(&["X", "X", "X"]);
        let r = ratio_matrix(&g, Grouping::Sectors(&map)).unwrap();
        assert_eq!(r.phi, DMatrix::zeros(1, 1));
        assert_eq!(r.phi_scaled, DMatrix::zeros(1, 1));
        let partial = sectors(&["X", "X"]);
        assert!(matches!(ratio_matrix(&g, Grouping::Sectors(&partial)), Err(Error::UncoveredVertex(id)) if id == "A3"));
    }

    proptest! {
        #[test]
        fn counts_sum_to_edges(
            raw in proptest::collection::btree_map((0usize..9, 0usize..9), prop_oneof![Just(0.3), Just(-0.3)], 0..36),
            groups in proptest::collection::vec(0usize..3, 9),
        ) {
            let edges: Vec<(usize, usize, f64)> = raw.into_iter().filter(|((i, j), _)| i < j).map(|((i, j), w)| (i, j, w)).collect();
            let g = graph(9, &edges);
            let names: Vec<String> = groups.iter().map(|k| format!("S{k}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let r = ratio_matrix(&g, Grouping::Sectors(&sectors(&refs))).unwrap();
            let m = r.group_labels.len();
            let mut total = 0;
            for a in 0..m {
                for b in a..m {
                    total += r.counts_pos[a][b] + r.counts_neg[a][b];
                    let expect = ((r.counts_pos[a][b] as f64 + 1.0) / (r.counts_neg[a][b] as f64 + 1.0)).ln();
                    prop_assert_eq!(r.phi[(a, b)], expect);
                }
            }
            prop_assert_eq!(total, g.n_edges());
        }
    }
}
