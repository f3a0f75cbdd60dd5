//! Walktrap community detection.
//!
//! Each vertex is described by the distribution `P^t_{i·}` of a t-step
//! random walk started at it, on the unweighted graph with a self-loop at
//! every vertex. Communities are merged greedily: among adjacent pairs the
//! one with the smallest increase
//! `Δσ = (1/n) |C₁||C₂|/(|C₁|+|C₂|) · ‖D^{-1/2}(P^t_{C₁} − P^t_{C₂})‖²`
//! goes first, and the merged community carries the size-weighted average of
//! the two walk distributions.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::PartialCorrelationGraph;
use crate::error::{Error, Result};

pub const DEFAULT_WALK_LENGTH: usize = 4;

/// One dendrogram step. Original vertices have ids `0..p`; the community
/// formed by merge `m` gets id `p + m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub into: usize,
    pub delta_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    pub asset_ids: Vec<String>,
    /// Community of each asset, in `1..=k`, numbered by first appearance.
    pub labels: Vec<usize>,
    pub k: usize,
    /// Full dendrogram, of which the first `p − k` merges form the partition.
    pub merge_trace: Vec<Merge>,
}

impl CommunityPartition {
    /// Members of community `label`.
    pub fn members(&self, label: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }
}

struct Community {
    size: usize,
    walk: DVector<f64>,
}

fn delta_sigma(c1: &Community, c2: &Community, inv_degree: &DVector<f64>, n: f64) -> f64 {
    let r2: f64 = c1
        .walk
        .iter()
        .zip(c2.walk.iter())
        .zip(inv_degree.iter())
        .map(|((x, y), w)| (x - y).powi(2) * w)
        .sum();
    let (s1, s2) = (c1.size as f64, c2.size as f64);
    s1 * s2 / (s1 + s2) * r2 / n
}

/// Cuts the Walktrap dendrogram at `k` communities, or at the number of
/// connected components when that is larger.
pub fn walktrap(graph: &PartialCorrelationGraph, walk_length: usize, k: usize) -> Result<CommunityPartition> {
    let p = graph.n_vertices();
    if p == 0 {
        return Err(Error::EmptyGraph);
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut adj = graph.adjacency();
    for (i, row) in adj.iter_mut().enumerate() {
        row.push(i);
        row.sort_unstable();
    }
    let degree: Vec<f64> = adj.iter().map(|r| r.len() as f64).collect();
    let inv_degree = DVector::from_iterator(p, degree.iter().map(|d| 1.0 / d));

    // Row i of P^t, computed as t applications of x ← xP.
    let step = |x: &DVector<f64>| -> DVector<f64> {
        let mut y = DVector::zeros(p);
        for (u, row) in adj.iter().enumerate() {
            if x[u] != 0.0 {
                let share = x[u] / degree[u];
                for &v in row {
                    y[v] += share;
                }
            }
        }
        y
    };
    let mut communities: BTreeMap<usize, Community> = BTreeMap::new();
    for i in 0..p {
        let mut walk = DVector::zeros(p);
        walk[i] = 1.0;
        for _ in 0..walk_length {
            walk = step(&walk);
        }
        communities.insert(i, Community { size: 1, walk });
    }

    let n = p as f64;
    // Candidate merges between adjacent communities, keyed by (a, b), a < b.
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in &graph.edges {
        pairs.insert((e.i, e.j), delta_sigma(&communities[&e.i], &communities[&e.j], &inv_degree, n));
    }

    let mut members: BTreeMap<usize, Vec<usize>> = (0..p).map(|i| (i, vec![i])).collect();
    let mut merge_trace = Vec::new();
    let mut partition_at_k: Option<BTreeMap<usize, Vec<usize>>> = (p <= k).then(|| members.clone());
    let mut next_id = p;
    while let Some((&(a, b), &ds)) = pairs
        .iter()
        .min_by(|x, y| x.1.total_cmp(y.1).then_with(|| x.0.cmp(y.0)))
    {
        let ca = communities.remove(&a).expect("live community");
        let cb = communities.remove(&b).expect("live community");
        let size = ca.size + cb.size;
        let walk = (&ca.walk * ca.size as f64 + &cb.walk * cb.size as f64) / size as f64;
        let merged = Community { size, walk };

        let mut neighbors: Vec<usize> = Vec::new();
        pairs.retain(|&(x, y), _| {
            if x == a || x == b || y == a || y == b {
                let other = if x == a || x == b { y } else { x };
                if other != a && other != b {
                    neighbors.push(other);
                }
                false
            } else {
                true
            }
        });
        neighbors.sort_unstable();
        neighbors.dedup();
        for c in neighbors {
            pairs.insert((c, next_id), delta_sigma(&communities[&c], &merged, &inv_degree, n));
        }
        communities.insert(next_id, merged);

        let mut joined = members.remove(&a).expect("live members");
        joined.extend(members.remove(&b).expect("live members"));
        members.insert(next_id, joined);
        merge_trace.push(Merge {
            a,
            b,
            into: next_id,
            delta_sigma: ds,
        });
        next_id += 1;
        if partition_at_k.is_none() && members.len() == k {
            partition_at_k = Some(members.clone());
        }
    }
    let groups = partition_at_k.unwrap_or(members);

    let mut community_of = vec![0usize; p];
    for (gid, vs) in &groups {
        for &v in vs {
            community_of[v] = *gid;
        }
    }
    let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
    let labels: Vec<usize> = community_of
        .iter()
        .map(|g| {
            let next = relabel.len() + 1;
            *relabel.entry(*g).or_insert(next)
        })
        .collect();
    Ok(CommunityPartition {
        asset_ids: graph.asset_ids.clone(),
        k: relabel.len(),
        labels,
        merge_trace,
    })
}
