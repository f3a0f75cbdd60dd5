//! Sample covariance of a return panel.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::ReturnsPanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divisor {
    /// Maximum-likelihood scaling `1/n`.
    #[default]
    N,
    /// Unbiased scaling `1/(n-1)`.
    NMinus1,
}

impl Divisor {
    fn value(self, n: usize) -> f64 {
        match self {
            Divisor::N => n as f64,
            Divisor::NMinus1 => (n - 1) as f64,
        }
    }
}

/// Symmetric `p × p` covariance matrix with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub asset_ids: Vec<String>,
    #[serde(with = "linalg::rows")]
    pub s: DMatrix<f64>,
    pub divisor: Divisor,
    /// Number of observations behind the estimate; 0 for a population matrix.
    pub sample_size: usize,
}

impl CovarianceEstimate {
    /// Wraps a known covariance matrix (for instance a model-implied Σ).
    pub fn population(asset_ids: Vec<String>, sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() {
            return Err(Error::DimensionMismatch {
                context: "covariance is not square",
                expected: sigma.nrows(),
                actual: sigma.ncols(),
            });
        }
        if asset_ids.len() != sigma.nrows() {
            return Err(Error::DimensionMismatch {
                context: "covariance asset ids",
                expected: sigma.nrows(),
                actual: asset_ids.len(),
            });
        }
        let scale = sigma.amax().max(1.0);
        if linalg::asymmetry(&sigma) > 1e-12 * scale {
            return Err(Error::InvalidParameter("covariance matrix is not symmetric".into()));
        }
        Ok(Self {
            asset_ids,
            s: linalg::symmetrize(&sigma),
            divisor: Divisor::N,
            sample_size: 0,
        })
    }

    /// Population covariance with generic ids `A1..Ap`.
    pub fn from_matrix(sigma: DMatrix<f64>) -> Result<Self> {
        let ids = crate::panel::default_ids(sigma.nrows());
        Self::population(ids, sigma)
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Mean of the diagonal; the natural variance scale of the problem.
    pub(crate) fn variance_scale(&self) -> f64 {
        let p = self.dim();
        if p == 0 {
            return 1.0;
        }
        let mean = self.s.diagonal().sum() / p as f64;
        if mean > 0.0 && mean.is_finite() {
            mean
        } else {
            1.0
        }
    }
}

/// `S = (1/divisor) Σ_t (y_t − ȳ)(y_t − ȳ)ᵀ`.
pub fn sample_covariance(panel: &ReturnsPanel, divisor: Divisor) -> Result<CovarianceEstimate> {
    let n = panel.n_obs();
    if n < 2 {
        return Err(Error::DegenerateSample { n });
    }
    let y = panel.values();
    let mut x = y.clone();
    for i in 0..x.nrows() {
        let mean = y.row(i).sum() / n as f64;
        x.row_mut(i).add_scalar_mut(-mean);
    }
    let scatter = &x * x.transpose();
    let s = linalg::symmetrize(&scatter) / divisor.value(n);
    Ok(CovarianceEstimate {
        asset_ids: panel.asset_ids().to_vec(),
        s,
        divisor,
        sample_size: n,
    })
}
