//! Factor-model baselines and implied factors of the GRM.
//!
//! Exogenous models regress returns on observed factor series; PCA models
//! take the leading eigenvectors of the sample covariance as exposures and
//! recover latent factor returns by projection. The implied factor matrix
//! holds the leading eigenvectors of Ω̂⁻¹; its first column, scaled to mean
//! one, is the implied beta.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariance::{sample_covariance, Divisor};
use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::{center, FactorPanel, ReturnsPanel};
use crate::precision::PrecisionEstimate;

/// Relative gap below which two eigenvalues at a PCA cut count as tied.
const PCA_TIE_TOLERANCE: f64 = 1e-12;
/// Relative gap below which leading eigenvalues of Ω̂⁻¹ count as tied.
const IMPLIED_TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Exogenous,
    Pca,
}

/// Which observations a model was fitted on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleInfo {
    pub n_obs: usize,
    pub first: NaiveDate,
    pub last: NaiveDate,
}

impl SampleInfo {
    pub(crate) fn of(panel: &ReturnsPanel) -> Self {
        let ts = panel.timestamps();
        Self {
            n_obs: ts.len(),
            first: ts[0],
            last: ts[ts.len() - 1],
        }
    }
}

/// `Y = BX + Z` with a `p × k` exposure matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub kind: FactorKind,
    pub asset_ids: Vec<String>,
    pub factor_names: Vec<String>,
    #[serde(with = "linalg::rows")]
    pub b: DMatrix<f64>,
    pub k: usize,
    /// Leading covariance eigenvalues for PCA models.
    pub eigenvalues: Option<Vec<f64>>,
    pub fitted_on: SampleInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Orthonormal columns.
    Unit,
    /// Each column divided by its mean.
    MeanOne,
}

/// Leading eigenvectors of Ω̂⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedFactorMatrix {
    pub asset_ids: Vec<String>,
    #[serde(with = "linalg::rows")]
    pub b_imp: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub normalization: Normalization,
}

fn factor_gram_inverse(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = x * x.transpose();
    linalg::spd_inverse(&gram).ok_or(Error::SingularFactorGram)
}

/// Least-squares exposures `B̂ = Y Xᵀ (X Xᵀ)⁻¹`. Both panels are centered
/// first.
pub fn fit_exogenous(panel: &ReturnsPanel, factors: &FactorPanel) -> Result<FactorModel> {
    factors
        .check_aligned(panel)
        .map_err(|e| Error::Misalignment(e.to_string()))?;
    let y = center(panel);
    let x = factors.centered();
    let gram_inv = factor_gram_inverse(x.values())?;
    let b = y.values() * x.values().transpose() * gram_inv;
    Ok(FactorModel {
        kind: FactorKind::Exogenous,
        asset_ids: panel.asset_ids().to_vec(),
        factor_names: factors.factor_names().to_vec(),
        k: factors.n_factors(),
        b,
        eigenvalues: None,
        fitted_on: SampleInfo::of(panel),
    })
}

/// Top-k eigenvectors of the sample covariance (divisor n − 1), in
/// descending eigenvalue order, each signed so that its largest-magnitude
/// entry is positive.
pub fn fit_pca(panel: &ReturnsPanel, k: usize) -> Result<FactorModel> {
    let p = panel.n_assets();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ {p}, got {k}")));
    }
    let s = sample_covariance(&center(panel), Divisor::NMinus1)?;
    let eig = linalg::sym_eigen_desc(&s.s);
    if k < p {
        let gap = eig.values[k - 1] - eig.values[k];
        if gap <= PCA_TIE_TOLERANCE * eig.values[0].abs() {
            return Err(Error::TiedEigenvalues { index: k, gap });
        }
    }
    let b = oriented_columns(&eig.vectors, k);
    Ok(FactorModel {
        kind: FactorKind::Pca,
        asset_ids: panel.asset_ids().to_vec(),
        factor_names: (1..=k).map(|i| format!("PC{i}")).collect(),
        k,
        b,
        eigenvalues: Some(eig.values[..k].to_vec()),
        fitted_on: SampleInfo::of(panel),
    })
}

fn oriented_columns(vectors: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut b = vectors.columns(0, k).into_owned();
    for c in 0..k {
        let mut col = b.column(c).into_owned();
        linalg::orient_largest_positive(&mut col);
        b.set_column(c, &col);
    }
    b
}

/// Out-of-sample prediction. Exogenous models use `B̂X_O` with the supplied
/// (and centered) factor returns; PCA models project each column onto the
/// span of the exposures.
pub fn predict_factor(
    model: &FactorModel,
    out_panel: &ReturnsPanel,
    out_factors: Option<&FactorPanel>,
) -> Result<ReturnsPanel> {
    if out_panel.asset_ids() != model.asset_ids.as_slice() {
        return Err(Error::AssetMismatch("factor model and panel"));
    }
    let b = &model.b;
    let yhat = match model.kind {
        FactorKind::Exogenous => {
            let f = out_factors.ok_or(Error::MissingFactors)?;
            f.check_aligned(out_panel)
                .map_err(|e| Error::Misalignment(e.to_string()))?;
            if f.n_factors() != model.k {
                return Err(Error::DimensionMismatch {
                    context: "number of factors",
                    expected: model.k,
                    actual: f.n_factors(),
                });
            }
            b * f.centered().values()
        }
        FactorKind::Pca => {
            let btb_inv = linalg::spd_inverse(&(b.transpose() * b)).ok_or(Error::SingularFactorGram)?;
            let xhat = btb_inv * b.transpose() * out_panel.values();
            b * xhat
        }
    };
    Ok(out_panel.with_prediction(yhat))
}

/// Leading k eigenvectors of Ω̂⁻¹ with the sign convention of [`fit_pca`];
/// `MeanOne` then divides each column by its mean.
pub fn implied_factors(omega: &PrecisionEstimate, k: usize, normalization: Normalization) -> Result<ImpliedFactorMatrix> {
    let p = omega.dim();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ {p}, got {k}")));
    }
    let sigma = omega.covariance()?;
    let eig = linalg::sym_eigen_desc(&sigma);
    let lead = eig.values[0].abs();
    for c in 0..k.min(p - 1) {
        let gap = eig.values[c] - eig.values[c + 1];
        if gap <= IMPLIED_TIE_TOLERANCE * lead {
            return Err(Error::TiedEigenvalues { index: c + 1, gap });
        }
    }
    if eig.values[k - 1] <= 0.0 {
        return Err(Error::SingularOmega(format!(
            "eigenvalue {k} of the implied covariance is {}",
            eig.values[k - 1]
        )));
    }
    let mut b = oriented_columns(&eig.vectors, k);
    if normalization == Normalization::MeanOne {
        for c in 0..k {
            let mean = b.column(c).mean();
            if mean.abs() <= 1e-12 * b.column(c).amax() {
                return Err(Error::ZeroMeanEigenvector { index: c + 1 });
            }
            b.column_mut(c).unscale_mut(mean);
        }
    }
    Ok(ImpliedFactorMatrix {
        asset_ids: omega.asset_ids.clone(),
        b_imp: b,
        eigenvalues: eig.values[..k].to_vec(),
        normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::PrecisionMethod;
    use nalgebra::DVector;

    fn factor_panel(panel: &ReturnsPanel, rows: usize, data: &[f64]) -> FactorPanel {
        let names = (1..=rows).map(|i| format!("F{i}")).collect();
        FactorPanel::aligned_with(panel, names, DMatrix::from_row_slice(rows, panel.n_obs(), data)).unwrap()
    }

    #[test]
    fn exogenous_scalar_regression() {
        let x = [0.1, -0.3, 0.2, 0.0, 0.4, -0.4];
        let y: Vec<f64> = x.iter().chain(x.iter()).map(|v| 2.0 * v).collect();
        let panel = ReturnsPanel::from_matrix(DMatrix::from_row_slice(2, 6, &y)).unwrap();
        let f = factor_panel(&panel, 1, &x);
        let m = fit_exogenous(&panel, &f).unwrap();
        assert!((m.b[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((m.b[(1, 0)] - 2.0).abs() < 1e-12);

        let dup: Vec<f64> = x.iter().chain(x.iter()).copied().collect();
        let f2 = factor_panel(&panel, 2, &dup);
        assert!(matches!(fit_exogenous(&panel, &f2), Err(Error::SingularFactorGram)));
    }

    #[test]
    fn exogenous_needs_factors_out_of_sample() {
        let x = [0.1, -0.3, 0.2, 0.0];
        let panel = ReturnsPanel::from_matrix(DMatrix::from_row_slice(2, 4, &[0.2, -0.6, 0.4, 0.0, 0.1, -0.3, 0.2, 0.0])).unwrap();
        let m = fit_exogenous(&panel, &factor_panel(&panel, 1, &x)).unwrap();
        assert!(matches!(predict_factor(&m, &panel, None), Err(Error::MissingFactors)));
        let zeros = factor_panel(&panel, 1, &[0.0; 4]);
        let yhat = predict_factor(&m, &panel, Some(&zeros)).unwrap();
        assert_eq!(yhat.values(), &DMatrix::zeros(2, 4));
    }

    #[test]
    fn pca_ties_and_full_rank_projection() {
        // Columns ±(2,0,0), ±(0,1,0), ±(0,0,1), scaled so S = diag(4,1,1)·c.
        let data = [2.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0];
        let panel = ReturnsPanel::from_matrix(DMatrix::from_row_slice(3, 6, &data)).unwrap();
        let m = fit_pca(&panel, 1).unwrap();
        assert!((m.b[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(matches!(fit_pca(&panel, 2), Err(Error::TiedEigenvalues { index: 2, .. })));

        let full = fit_pca(&panel, 3).unwrap();
        assert!((&full.b * full.b.transpose() - DMatrix::identity(3, 3)).amax() < 1e-12);
        let yhat = predict_factor(&full, &panel, None).unwrap();
        assert!((yhat.values() - panel.values()).amax() < 1e-12);
    }

    #[test]
    fn implied_factor_diagonal_case() {
        let omega = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / 9.0, 1.0, 0.5]));
        let est = PrecisionEstimate::from_omega(crate::panel::default_ids(3), omega, PrecisionMethod::ExactInverse);
        let f = implied_factors(&est, 1, Normalization::Unit).unwrap();
        assert!((f.b_imp[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((f.eigenvalues[0] - 9.0).abs() < 1e-12);
        assert!(matches!(
            implied_factors(&est, 1, Normalization::MeanOne),
            Ok(m) if (m.b_imp.column(0).mean() - 1.0).abs() < 1e-12
        ));

        let eye = PrecisionEstimate::from_omega(crate::panel::default_ids(3), DMatrix::identity(3, 3), PrecisionMethod::ExactInverse);
        assert!(matches!(implied_factors(&eye, 1, Normalization::Unit), Err(Error::TiedEigenvalues { .. })));
    }

    #[test]
    fn implied_zero_mean_vector() {
        // Leading eigenvector (1, −1)/√2 has zero mean.
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let est = PrecisionEstimate::from_omega(
            crate::panel::default_ids(2),
            sigma.try_inverse().unwrap(),
            PrecisionMethod::ExactInverse,
        );
        assert!(matches!(
            implied_factors(&est, 1, Normalization::MeanOne),
            Err(Error::ZeroMeanEigenvector { index: 1 })
        ));
    }
}
