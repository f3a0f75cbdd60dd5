//! Hard-thresholded PCA partial-correlation graph.
//!
//! The PCA plug-in precision is `Ω̂ = (B̂Λ̂B̂ᵀ + Δ̂)⁻¹` with the top-k
//! eigenpairs of S and `Δ̂ = diag(S − B̂Λ̂B̂ᵀ)`. Its partial correlations are
//! dense, so entries with `|ϱ̂| ≤ γ` are zeroed, with γ chosen to hit a
//! target edge count.

use nalgebra::DMatrix;

use super::{partial_correlation_matrix, GraphSource, PartialCorrelationGraph};
use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::linalg;
use crate::precision::{PrecisionEstimate, PrecisionMethod};

const TIE_TOLERANCE: f64 = 1e-12;

/// PCA plug-in precision matrix from the top-k eigenpairs of S.
pub fn pca_plugin_precision(s: &CovarianceEstimate, k: usize) -> Result<PrecisionEstimate> {
    let p = s.dim();
    if k == 0 || k >= p {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k < {p}, got {k}")));
    }
    let eig = linalg::sym_eigen_desc(&s.s);
    let gap = eig.values[k - 1] - eig.values[k];
    if gap <= TIE_TOLERANCE * eig.values[0].abs() {
        return Err(Error::TiedEigenvalues { index: k, gap });
    }
    let b = eig.vectors.columns(0, k).into_owned();
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&eig.values[..k]));
    let low_rank = &b * lambda * b.transpose();
    let mut sigma = low_rank.clone();
    for i in 0..p {
        sigma[(i, i)] = s.s[(i, i)];
    }
    let omega = linalg::spd_inverse(&sigma)
        .ok_or_else(|| Error::SingularOmega("PCA plug-in covariance is not invertible".into()))?;
    Ok(PrecisionEstimate::from_omega(s.asset_ids.clone(), omega, PrecisionMethod::PcaPlugin))
}

/// Thresholds the PCA plug-in partial correlations at the smallest γ whose
/// edge count `#{|ϱ̂_ij| > γ}` does not exceed `target_edges`.
///
/// The edge count is a non-increasing step function of γ that only changes
/// at the distinct magnitudes `|ϱ̂_ij|`, so the bisection runs over those
/// sorted magnitudes and the result is exact.
pub fn threshold_pca_graph(s: &CovarianceEstimate, k: usize, target_edges: usize) -> Result<PartialCorrelationGraph> {
    let p = s.dim();
    let max_pairs = p * (p.saturating_sub(1)) / 2;
    if target_edges > max_pairs {
        return Err(Error::UnreachableTarget {
            target: target_edges,
            max: max_pairs,
        });
    }
    let omega = pca_plugin_precision(s, k)?;
    let pcor = partial_correlation_matrix(&omega)?;

    let mut mags: Vec<f64> = Vec::with_capacity(max_pairs);
    for i in 0..p {
        for j in (i + 1)..p {
            let v = pcor[(i, j)].abs();
            if v > 0.0 {
                mags.push(v);
            }
        }
    }
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let count = |gamma: f64| -> usize {
        let mut c = 0;
        for i in 0..p {
            for j in (i + 1)..p {
                if pcor[(i, j)].abs() > gamma {
                    c += 1;
                }
            }
        }
        c
    };

    let gamma = if count(0.0) <= target_edges {
        0.0
    } else {
        // Invariant: count(mags[hi]) ≤ target < count(mags[lo]) or lo = -1.
        let (mut lo, mut hi) = (-1isize, mags.len() as isize - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if count(mags[mid as usize]) <= target_edges {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        mags[hi as usize]
    };

    let thresholded = pcor.map(|v| if v.abs() > gamma { v } else { 0.0 });
    let mut graph = PartialCorrelationGraph::from_matrix(s.asset_ids.clone(), &thresholded, GraphSource::PcaThreshold)?;
    graph.threshold = Some(gamma);
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn covariance() -> CovarianceEstimate {
        // Two-factor covariance plus distinct idiosyncratic noise on 10 assets.
        let b = DMatrix::from_fn(10, 2, |i, c| if c == 0 { 1.0 + 0.1 * i as f64 } else { (i as f64 - 4.5) / 5.0 });
        let mut sigma = &b * b.transpose();
        for i in 0..10 {
            sigma[(i, i)] += 0.2 + 0.03 * i as f64;
        }
        CovarianceEstimate::from_matrix(sigma).unwrap()
    }

    #[test]
    fn targets_and_monotonicity() {
        let s = covariance();
        let none = threshold_pca_graph(&s, 1, 0).unwrap();
        assert_eq!(none.n_edges(), 0);
        let all = threshold_pca_graph(&s, 1, 45).unwrap();
        assert_eq!(all.threshold, Some(0.0));
        let nonzero = partial_correlation_matrix(&pca_plugin_precision(&s, 1).unwrap())
            .unwrap()
            .iter()
            .filter(|v| **v != 0.0)
            .count()
            / 2;
        assert_eq!(all.n_edges(), nonzero);

        let mut last_gamma = f64::INFINITY;
        for target in [0, 3, 12, 20, 45] {
            let g = threshold_pca_graph(&s, 1, target).unwrap();
            assert!(g.n_edges() <= target);
            let gamma = g.threshold.unwrap();
            assert!(gamma <= last_gamma);
            last_gamma = gamma;
        }
        let g = threshold_pca_graph(&s, 1, 12).unwrap();
        assert_eq!(g.n_edges(), 12);
        assert!(matches!(threshold_pca_graph(&s, 1, 46), Err(Error::UnreachableTarget { .. })));
    }
}
