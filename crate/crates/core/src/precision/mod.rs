//! Sparse precision-matrix estimation.
//!
//! Two penalized estimators are provided: the graphical lasso ([`glasso`]),
//! solved by block coordinate descent over columns, and CONCORD
//! ([`concord`]), solved by cyclic coordinate descent. Both are wrapped by
//! warm-started regularization paths ([`lambda_path`]) and K-fold
//! cross-validation scored by GRM prediction error ([`cross_validate`]).

mod concord;
mod cv;
mod glasso;
mod path;

pub use concord::{concord, concord_kkt_residual, concord_objective, concord_warm};
pub use cv::{cross_validate, CvResult};
pub use glasso::{glasso, glasso_kkt_residual, glasso_objective, glasso_warm};
pub use path::{default_grid, fit, fit_warm, lambda_max, lambda_path};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMethod {
    Glasso,
    Concord,
    PcaPlugin,
    ExactInverse,
}

impl PrecisionMethod {
    pub fn name(self) -> &'static str {
        match self {
            PrecisionMethod::Glasso => "glasso",
            PrecisionMethod::Concord => "concord",
            PrecisionMethod::PcaPlugin => "pca_plugin",
            PrecisionMethod::ExactInverse => "exact_inverse",
        }
    }
}

/// Which penalized solver to run along a path or inside cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Solver {
    Glasso,
    Concord { frobenius_weight: f64 },
}

impl Solver {
    pub fn method(&self) -> PrecisionMethod {
        match self {
            Solver::Glasso => PrecisionMethod::Glasso,
            Solver::Concord { .. } => PrecisionMethod::Concord,
        }
    }
}

/// Stopping rule shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

/// Estimated precision matrix Ω̂ together with solver metadata.
///
/// Serializes as the dense matrix (row-major) plus a `support` triplet list
/// `(row, col, value)` of its nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrecisionWire", into = "PrecisionWire")]
pub struct PrecisionEstimate {
    pub asset_ids: Vec<String>,
    pub omega: DMatrix<f64>,
    pub method: PrecisionMethod,
    pub lambda: f64,
    pub frobenius_weight: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    /// Final value of the convergence measure (KKT residual or update size).
    pub residual: f64,
}

impl PrecisionEstimate {
    /// Ω = Σ⁻¹ for a known positive definite covariance.
    pub fn exact_inverse(sigma: &CovarianceEstimate) -> Result<Self> {
        let omega = linalg::spd_inverse(&sigma.s).ok_or(Error::SingularInput)?;
        Ok(Self::from_omega(sigma.asset_ids.clone(), omega, PrecisionMethod::ExactInverse))
    }

    /// Wraps an already-computed precision matrix.
    pub fn from_omega(asset_ids: Vec<String>, omega: DMatrix<f64>, method: PrecisionMethod) -> Self {
        Self {
            asset_ids,
            omega: linalg::symmetrize(&omega),
            method,
            lambda: 0.0,
            frobenius_weight: 0.0,
            iterations: 0,
            converged: true,
            objective_trace: Vec::new(),
            residual: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    /// Off-diagonal pairs `(i, j)`, `i < j`, with a nonzero entry.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let p = self.dim();
        let mut out = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if self.omega[(i, j)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Number of exactly-zero cells over the whole matrix.
    pub fn zero_count(&self) -> usize {
        self.omega.iter().filter(|v| **v == 0.0).count()
    }

    pub fn nonzero_count(&self) -> usize {
        self.omega.len() - self.zero_count()
    }

    /// Σ̂ = Ω̂⁻¹, guarded against near-singularity.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        linalg::guarded_inverse(&self.omega)
            .map(|m| linalg::symmetrize(&m))
            .ok_or_else(|| Error::SingularOmega(format!("condition number ≥ {:e}", linalg::MAX_CONDITION)))
    }

    fn check(&self) -> std::result::Result<(), String> {
        let p = self.omega.nrows();
        if self.omega.ncols() != p || self.asset_ids.len() != p {
            return Err("precision matrix shape does not match asset ids".into());
        }
        if linalg::asymmetry(&self.omega) > 1e-10 * self.omega.amax().max(1.0) {
            return Err("precision matrix is not symmetric".into());
        }
        for i in 0..p {
            for j in 0..p {
                if (self.omega[(i, j)] == 0.0) != (self.omega[(j, i)] == 0.0) {
                    return Err(format!("asymmetric sparsity pattern at ({i},{j})"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PrecisionWire {
    asset_ids: Vec<String>,
    method: PrecisionMethod,
    lambda: f64,
    frobenius_weight: f64,
    iterations: usize,
    converged: bool,
    residual: f64,
    objective_trace: Vec<f64>,
    omega: Vec<Vec<f64>>,
    support: Vec<(usize, usize, f64)>,
}

impl From<PrecisionEstimate> for PrecisionWire {
    fn from(e: PrecisionEstimate) -> Self {
        let p = e.omega.nrows();
        let mut support = Vec::new();
        for i in 0..p {
            for j in 0..p {
                let v = e.omega[(i, j)];
                if v != 0.0 {
                    support.push((i, j, v));
                }
            }
        }
        Self {
            omega: linalg::rows::to_rows(&e.omega),
            asset_ids: e.asset_ids,
            method: e.method,
            lambda: e.lambda,
            frobenius_weight: e.frobenius_weight,
            iterations: e.iterations,
            converged: e.converged,
            residual: e.residual,
            objective_trace: e.objective_trace,
            support,
        }
    }
}

impl TryFrom<PrecisionWire> for PrecisionEstimate {
    type Error = String;

    fn try_from(w: PrecisionWire) -> std::result::Result<Self, String> {
        let omega = linalg::rows::from_rows(&w.omega)?;
        let est = PrecisionEstimate {
            asset_ids: w.asset_ids,
            omega,
            method: w.method,
            lambda: w.lambda,
            frobenius_weight: w.frobenius_weight,
            iterations: w.iterations,
            converged: w.converged,
            objective_trace: w.objective_trace,
            residual: w.residual,
        };
        est.check()?;
        let listed = w.support.len();
        if listed != est.nonzero_count() {
            return Err(format!("support lists {listed} entries but the matrix has {}", est.nonzero_count()));
        }
        for (i, j, v) in w.support {
            if est.omega.get((i, j)) != Some(&v) {
                return Err(format!("support entry ({i},{j}) disagrees with the dense matrix"));
            }
        }
        Ok(est)
    }
}

/// Soft-thresholding operator.
pub(crate) fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Subgradient residual of one penalized coordinate: `|g + λ sign(x)|` when
/// `x ≠ 0`, otherwise the amount by which `|g|` exceeds `λ`.
pub(crate) fn subgradient_residual(g: f64, x: f64, lambda: f64) -> f64 {
    if x != 0.0 {
        (g + lambda * x.signum()).abs()
    } else {
        (g.abs() - lambda).max(0.0)
    }
}

pub(crate) fn validate_inputs(s: &CovarianceEstimate, lambda: f64, opts: &SolverOptions) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidParameter("tol must be positive and max_iter at least 1".into()));
    }
    if s.dim() == 0 {
        return Err(Error::InsufficientData("empty covariance matrix".into()));
    }
    if linalg::asymmetry(&s.s) > 1e-12 * s.s.amax().max(1.0) {
        return Err(Error::InvalidParameter("covariance matrix is not symmetric".into()));
    }
    Ok(())
}

pub(crate) fn check_warm(s: &CovarianceEstimate, warm: Option<&PrecisionEstimate>) -> Result<()> {
    if let Some(w) = warm {
        if w.dim() != s.dim() {
            return Err(Error::DimensionMismatch {
                context: "warm start",
                expected: s.dim(),
                actual: w.dim(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_revalidates() {
        let omega = DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.0]);
        let est = PrecisionEstimate::from_omega(vec!["X".into(), "Y".into()], omega, PrecisionMethod::Glasso);
        let text = serde_json::to_string(&est).unwrap();
        assert!(text.contains("\"support\""));
        let back: PrecisionEstimate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, est);

        let bad = text.replace("[1,0,-0.5]", "[1,0,-0.6]");
        assert!(serde_json::from_str::<PrecisionEstimate>(&bad).is_err());
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(0.75, 0.25), 0.5);
        assert_eq!(soft_threshold(-0.75, 0.25), -0.5);
        assert_eq!(soft_threshold(0.125, 0.25), 0.0);
    }
}
