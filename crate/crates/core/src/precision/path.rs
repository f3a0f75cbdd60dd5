//! Regularization paths.

use super::{concord_warm, glasso_warm, PrecisionEstimate, Solver, SolverOptions};
use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};

const DEFAULT_GRID_POINTS: usize = 20;
const DEFAULT_GRID_RATIO: f64 = 100.0;

/// Smallest λ at which the solver returns a diagonal estimate.
///
/// For glasso this is `max_{i≠j} |S_ij|`. For CONCORD the diagonal solution
/// `θ_ii = 1/√(S_ii + τ)` stays optimal while
/// `|S_ij|(1/√(S_ii + τ) + 1/√(S_jj + τ)) ≤ λ`, so the threshold is the
/// largest such value.
pub fn lambda_max(s: &CovarianceEstimate, solver: &Solver) -> f64 {
    let p = s.dim();
    let mut best = 0.0f64;
    for i in 0..p {
        for j in (i + 1)..p {
            let v = s.s[(i, j)].abs();
            let t = match solver {
                Solver::Glasso => v,
                Solver::Concord { frobenius_weight } => {
                    let ti = 1.0 / (s.s[(i, i)] + frobenius_weight).sqrt();
                    let tj = 1.0 / (s.s[(j, j)] + frobenius_weight).sqrt();
                    v * (ti + tj)
                }
            };
            if t.is_finite() {
                best = best.max(t);
            }
        }
    }
    best
}

/// 20 log-spaced values from `lambda_max` down to `lambda_max / 100`.
pub fn default_grid(s: &CovarianceEstimate, solver: &Solver) -> Vec<f64> {
    let top = lambda_max(s, solver);
    if top <= 0.0 {
        return vec![0.0];
    }
    let step = DEFAULT_GRID_RATIO.ln() / (DEFAULT_GRID_POINTS - 1) as f64;
    (0..DEFAULT_GRID_POINTS)
        .map(|k| if k == 0 { top } else { top * (-(k as f64) * step).exp() })
        .collect()
}

/// Single fit with the chosen solver.
pub fn fit(s: &CovarianceEstimate, solver: &Solver, lambda: f64, opts: &SolverOptions) -> Result<PrecisionEstimate> {
    fit_warm(s, solver, lambda, opts, None)
}

pub fn fit_warm(
    s: &CovarianceEstimate,
    solver: &Solver,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&PrecisionEstimate>,
) -> Result<PrecisionEstimate> {
    match solver {
        Solver::Glasso => glasso_warm(s, lambda, opts, warm),
        Solver::Concord { frobenius_weight } => concord_warm(s, lambda, *frobenius_weight, opts, warm),
    }
}

/// Fits every λ of a descending grid, warm-starting each fit from the
/// previous solution. Errors are tagged with the λ that produced them.
pub fn lambda_path(
    s: &CovarianceEstimate,
    solver: &Solver,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<PrecisionEstimate>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("lambda grid must be sorted in descending order".into()));
    }
    let mut out: Vec<PrecisionEstimate> = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let est = fit_warm(s, solver, lambda, opts, out.last()).map_err(|e| Error::AtLambda {
            lambda,
            source: Box::new(e),
        })?;
        out.push(est);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn grid_shape() {
        let s = CovarianceEstimate::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap();
        let g = default_grid(&s, &Solver::Glasso);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.5);
        assert!((g[19] - 0.005).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        let c = lambda_max(&s, &Solver::Concord { frobenius_weight: 0.0 });
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn endpoints_of_a_two_point_path() {
        let s = CovarianceEstimate::from_matrix(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0],
        ))
        .unwrap();
        let opts = SolverOptions { tol: 1e-10, max_iter: 500 };
        let path = lambda_path(&s, &Solver::Glasso, &[lambda_max(&s, &Solver::Glasso), 0.0], &opts).unwrap();
        assert!(path[0].edges().is_empty());
        let inv = s.s.clone().try_inverse().unwrap();
        assert!((&path[1].omega - inv).amax() < 1e-8);
    }

    #[test]
    fn unsorted_grid_is_rejected() {
        let s = CovarianceEstimate::from_matrix(DMatrix::identity(2, 2)).unwrap();
        assert!(lambda_path(&s, &Solver::Glasso, &[0.1, 0.2], &SolverOptions::default()).is_err());
        assert!(lambda_path(&s, &Solver::Glasso, &[], &SolverOptions::default()).is_err());
    }

    #[test]
    fn errors_carry_lambda() {
        let s = CovarianceEstimate::from_matrix(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let err = lambda_path(&s, &Solver::Glasso, &[0.5, 0.0], &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::AtLambda { lambda, .. } if lambda == 0.0));
    }
}
