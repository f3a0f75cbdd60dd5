//! Graphical lasso by block coordinate descent.
//!
//! Minimizes `−log det Θ + tr(SΘ) + λ Σ_ij |θ_ij|` (diagonal included). The
//! working matrix W estimates Σ̂ = Θ⁻¹ with `W_jj = S_jj + λ`; each column is
//! updated by solving a lasso problem in the remaining block by cyclic
//! coordinate descent. After every sweep Θ is rebuilt from W and the lasso
//! coefficients, its sparsity pattern is symmetrized, and convergence is
//! judged by the KKT residual of the objective evaluated at Θ itself.

use nalgebra::DMatrix;

use super::{check_warm, soft_threshold, subgradient_residual, validate_inputs, PrecisionEstimate, PrecisionMethod, SolverOptions};
use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::linalg;

const INNER_MAX_ITER: usize = 10_000;

/// Graphical lasso with a cold start.
pub fn glasso(s: &CovarianceEstimate, lambda: f64, tol: f64, max_iter: usize) -> Result<PrecisionEstimate> {
    glasso_warm(s, lambda, &SolverOptions { tol, max_iter }, None)
}

/// `−log det Θ + tr(SΘ) + λ‖Θ‖₁`; `+∞` outside the positive definite cone.
pub fn glasso_objective(s: &DMatrix<f64>, omega: &DMatrix<f64>, lambda: f64) -> f64 {
    let Some(chol) = linalg::symmetrize(omega).cholesky() else {
        return f64::INFINITY;
    };
    let log_det: f64 = chol.l_dirty().diagonal().iter().take(omega.nrows()).map(|d| 2.0 * d.ln()).sum();
    let trace = s.component_mul(omega).sum();
    let l1: f64 = omega.iter().map(|v| v.abs()).sum();
    -log_det + trace + lambda * l1
}

/// Largest violation of the glasso optimality conditions
/// `S − Θ⁻¹ + λ Γ = 0`, `Γ ∈ ∂‖Θ‖₁`, in the units of S.
pub fn glasso_kkt_residual(s: &DMatrix<f64>, omega: &DMatrix<f64>, lambda: f64) -> f64 {
    match linalg::spd_inverse(omega) {
        Some(sigma) => kkt_with_sigma(s, omega, &sigma, lambda),
        None => f64::INFINITY,
    }
}

fn kkt_with_sigma(s: &DMatrix<f64>, omega: &DMatrix<f64>, sigma: &DMatrix<f64>, lambda: f64) -> f64 {
    let p = s.nrows();
    let mut worst = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            let g = s[(i, j)] - sigma[(i, j)];
            worst = worst.max(subgradient_residual(g, omega[(i, j)], lambda));
        }
    }
    worst
}

/// Graphical lasso, optionally warm-started from a previous estimate.
///
/// The reported residual and the stopping test use the KKT residual
/// divided by the mean diagonal of S, so `tol` is scale-free.
pub fn glasso_warm(
    s: &CovarianceEstimate,
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&PrecisionEstimate>,
) -> Result<PrecisionEstimate> {
    validate_inputs(s, lambda, opts)?;
    check_warm(s, warm)?;
    let p = s.dim();
    let sm = &s.s;
    let scale = s.variance_scale();

    if lambda == 0.0 {
        let eig = linalg::sym_eigen_desc(sm);
        let max = eig.values[0];
        let min = eig.values[p - 1];
        if !(max > 0.0) || min <= 1e-12 * max {
            return Err(Error::SingularInput);
        }
    }
    if (0..p).any(|i| sm[(i, i)] + lambda <= 0.0) {
        return Err(Error::SingularInput);
    }

    let (mut w, mut beta) = initial_state(sm, lambda, warm);
    let inner_tol = (opts.tol * 1e-3).min(1e-9);
    let mut trace = Vec::new();
    let mut omega = DMatrix::zeros(p, p);
    let mut residual = f64::INFINITY;

    for sweep in 1..=opts.max_iter {
        for j in 0..p {
            solve_column(sm, &mut w, &mut beta, j, lambda, inner_tol);
        }
        omega = recover_omega(&w, &beta);
        residual = match linalg::spd_inverse(&omega) {
            Some(sigma) => kkt_with_sigma(sm, &omega, &sigma, lambda) / scale,
            None => f64::INFINITY,
        };
        trace.push(glasso_objective(sm, &omega, lambda));
        if residual <= opts.tol {
            return Ok(finish(s, omega, lambda, sweep, true, trace, residual));
        }
    }
    let partial = finish(s, omega, lambda, opts.max_iter, false, trace, residual);
    Err(Error::NotConverged {
        method: "glasso",
        lambda,
        iterations: opts.max_iter,
        residual,
        partial: Box::new(partial),
    })
}

fn finish(
    s: &CovarianceEstimate,
    omega: DMatrix<f64>,
    lambda: f64,
    iterations: usize,
    converged: bool,
    objective_trace: Vec<f64>,
    residual: f64,
) -> PrecisionEstimate {
    PrecisionEstimate {
        asset_ids: s.asset_ids.clone(),
        omega,
        method: PrecisionMethod::Glasso,
        lambda,
        frobenius_weight: 0.0,
        iterations,
        converged,
        objective_trace,
        residual,
    }
}

/// Working covariance W and per-column lasso coefficients (column j of
/// `beta` regresses column j of W on the others; `beta[(j, j)] = 0`).
fn initial_state(s: &DMatrix<f64>, lambda: f64, warm: Option<&PrecisionEstimate>) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = s.nrows();
    if let Some(prev) = warm {
        let positive_diag = (0..p).all(|i| prev.omega[(i, i)] > 0.0);
        if positive_diag {
            if let Some(mut w) = linalg::spd_inverse(&prev.omega) {
                for i in 0..p {
                    w[(i, i)] = s[(i, i)] + lambda;
                }
                let beta = DMatrix::from_fn(p, p, |k, j| {
                    if k == j {
                        0.0
                    } else {
                        -prev.omega[(k, j)] / prev.omega[(j, j)]
                    }
                });
                return (w, beta);
            }
        }
    }
    let mut w = s.clone();
    for i in 0..p {
        w[(i, i)] += lambda;
    }
    (w, DMatrix::zeros(p, p))
}

/// Lasso `min ½βᵀW₁₁β − s₁₂ᵀβ + λ‖β‖₁` for column j by coordinate descent,
/// then writes `w₁₂ = W₁₁β` back into row and column j of W.
fn solve_column(s: &DMatrix<f64>, w: &mut DMatrix<f64>, beta: &mut DMatrix<f64>, j: usize, lambda: f64, inner_tol: f64) {
    let p = s.nrows();
    if p == 1 {
        return;
    }
    // r = s12 − W11 β over k ≠ j.
    let mut r = vec![0.0; p];
    for k in 0..p {
        if k == j {
            continue;
        }
        let mut acc = s[(k, j)];
        for l in 0..p {
            if l != j {
                acc -= w[(k, l)] * beta[(l, j)];
            }
        }
        r[k] = acc;
    }
    // Full passes alternate with passes restricted to the active set (the
    // nonzero coefficients); the loop ends when a full pass moves nothing
    // by more than the tolerance.
    let mut passes = 0;
    let mut active: Vec<usize> = Vec::with_capacity(p);
    while passes < INNER_MAX_ITER {
        passes += 1;
        let full = (0..p).filter(|&k| k != j);
        if coordinate_pass(w, beta, &mut r, j, full, lambda) <= inner_tol {
            break;
        }
        active.clear();
        active.extend((0..p).filter(|&k| k != j && beta[(k, j)] != 0.0));
        while passes < INNER_MAX_ITER {
            passes += 1;
            if coordinate_pass(w, beta, &mut r, j, active.iter().copied(), lambda) <= inner_tol {
                break;
            }
        }
    }
    for k in 0..p {
        if k == j {
            continue;
        }
        let mut acc = 0.0;
        for l in 0..p {
            if l != j {
                acc += w[(k, l)] * beta[(l, j)];
            }
        }
        w[(k, j)] = acc;
        w[(j, k)] = acc;
    }
}

/// One coordinate-descent pass over `coords`, keeping `r = s₁₂ − W₁₁β`
/// current. Returns the largest coefficient change.
fn coordinate_pass(
    w: &DMatrix<f64>,
    beta: &mut DMatrix<f64>,
    r: &mut [f64],
    j: usize,
    coords: impl Iterator<Item = usize>,
    lambda: f64,
) -> f64 {
    let p = w.nrows();
    let mut max_delta = 0.0f64;
    for k in coords {
        let wkk = w[(k, k)];
        let old = beta[(k, j)];
        let new = soft_threshold(r[k] + wkk * old, lambda) / wkk;
        if new != old {
            let delta = new - old;
            beta[(k, j)] = new;
            let col = w.column(k);
            for m in 0..p {
                r[m] -= col[m] * delta;
            }
            max_delta = max_delta.max(delta.abs());
        }
    }
    // Entry j of r is never read; keep it out of the bookkeeping.
    r[j] = 0.0;
    max_delta
}

/// `θ_jj = 1/(W_jj − w₁₂ᵀβ)`, `θ_kj = −β_k θ_jj`, followed by symmetrization:
/// an entry survives only when both triangles agree it is nonzero.
fn recover_omega(w: &DMatrix<f64>, beta: &DMatrix<f64>) -> DMatrix<f64> {
    let p = w.nrows();
    let mut theta = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut quad = 0.0;
        for k in 0..p {
            if k != j {
                quad += w[(k, j)] * beta[(k, j)];
            }
        }
        let tjj = 1.0 / (w[(j, j)] - quad);
        theta[(j, j)] = tjj;
        for k in 0..p {
            if k != j {
                theta[(k, j)] = -beta[(k, j)] * tjj;
            }
        }
    }
    for i in 0..p {
        for j in (i + 1)..p {
            let (a, b) = (theta[(i, j)], theta[(j, i)]);
            let v = if a == 0.0 || b == 0.0 { 0.0 } else { 0.5 * (a + b) };
            theta[(i, j)] = v;
            theta[(j, i)] = v;
        }
    }
    theta
}
