//! K-fold cross-validation of the penalty level.
//!
//! Folds are contiguous blocks of observations. For each fold the training
//! block and the held-out block are centered separately, a warm-started
//! path is fitted on the training covariance (divisor n), and every λ is
//! scored by the squared error of the GRM prediction `Â y` on the held-out
//! columns. Errors are pooled over all held-out (asset, time) cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lambda_path, Solver, SolverOptions};
use crate::covariance::{sample_covariance, Divisor};
use crate::error::{Error, Result};
use crate::grm::build_grm;
use crate::panel::{center, ReturnsPanel};

/// Relative tolerance under which two CV errors count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub grid: Vec<f64>,
    /// Pooled held-out mean squared prediction error, one per grid value.
    pub cv_errors: Vec<f64>,
    pub best_index: usize,
    pub best_lambda: f64,
    pub folds: usize,
}

/// Selects λ from a descending grid by K-fold cross-validation. Ties go to
/// the larger λ (the sparser model).
pub fn cross_validate(
    panel: &ReturnsPanel,
    solver: &Solver,
    grid: &[f64],
    folds: usize,
    opts: &SolverOptions,
) -> Result<CvResult> {
    let n = panel.n_obs();
    if folds < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 folds, got {folds}")));
    }
    if n < 2 * folds {
        return Err(Error::InsufficientData(format!(
            "{n} observations cannot fill {folds} folds of at least 2"
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }

    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| fold_errors(panel, solver, grid, f * n / folds, (f + 1) * n / folds, opts))
        .collect::<Result<_>>()?;

    let cells = (panel.n_assets() * n) as f64;
    let cv_errors: Vec<f64> = (0..grid.len())
        .map(|g| per_fold.iter().map(|e| e[g]).sum::<f64>() / cells)
        .collect();

    let min = cv_errors.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = min + TIE_TOLERANCE * min.abs();
    let best_index = (0..grid.len())
        .filter(|&g| cv_errors[g] <= threshold)
        .max_by(|&a, &b| grid[a].total_cmp(&grid[b]).then(b.cmp(&a)))
        .ok_or_else(|| Error::InsufficientData("cross-validation errors are not finite".into()))?;

    Ok(CvResult {
        grid: grid.to_vec(),
        best_lambda: grid[best_index],
        best_index,
        cv_errors,
        folds,
    })
}

/// Sum of squared held-out prediction errors for each grid value.
fn fold_errors(
    panel: &ReturnsPanel,
    solver: &Solver,
    grid: &[f64],
    start: usize,
    end: usize,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let train = center(&panel.without_columns(start, end)?);
    let held = center(&panel.columns(start, end)?);
    let s = sample_covariance(&train, Divisor::N)?;
    let path = lambda_path(&s, solver, grid, opts)?;
    path.iter()
        .map(|est| {
            let grm = build_grm(est)?;
            let y = held.values();
            let resid = y - grm.a() * y;
            Ok(resid.norm_squared())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn smoke_shape_contract() {
        let values = DMatrix::from_row_slice(2, 4, &[0.1, -0.2, 0.05, 0.3, 0.0, 0.1, -0.1, 0.2]);
        let panel = ReturnsPanel::from_matrix(values).unwrap();
        let grid = [0.05, 0.01];
        let cv = cross_validate(&panel, &Solver::Glasso, &grid, 2, &SolverOptions::default()).unwrap();
        assert_eq!(cv.cv_errors.len(), 2);
        assert!(cv.cv_errors.iter().all(|e| e.is_finite()));
        assert!(grid.contains(&cv.best_lambda));
    }

    #[test]
    fn too_few_observations() {
        let panel = ReturnsPanel::from_matrix(DMatrix::from_element(2, 3, 0.0)).unwrap();
        assert!(matches!(
            cross_validate(&panel, &Solver::Glasso, &[0.1], 2, &SolverOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}
