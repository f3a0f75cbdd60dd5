//! CONCORD pseudo-likelihood estimator by cyclic coordinate descent.
//!
//! Minimizes
//! `f(Θ) = −2 Σ_i log θ_ii + tr(SΘ²) + λ Σ_{i≠j} |θ_ij| + τ‖Θ‖²_F`
//! over symmetric Θ with positive diagonal. Every coordinate subproblem has
//! a closed-form minimizer, so each update can only lower `f`. The product
//! `SΘ` is maintained incrementally inside a sweep and recomputed between
//! sweeps.

use nalgebra::DMatrix;

use super::{check_warm, soft_threshold, subgradient_residual, validate_inputs, PrecisionEstimate, PrecisionMethod, SolverOptions};
use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};

/// CONCORD with a cold start.
pub fn concord(
    s: &CovarianceEstimate,
    lambda: f64,
    frobenius_weight: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PrecisionEstimate> {
    concord_warm(s, lambda, frobenius_weight, &SolverOptions { tol, max_iter }, None)
}

/// Value of the (augmented) CONCORD objective; `+∞` when a diagonal entry
/// is not positive.
pub fn concord_objective(s: &DMatrix<f64>, theta: &DMatrix<f64>, lambda: f64, frobenius_weight: f64) -> f64 {
    let p = theta.nrows();
    let mut log_term = 0.0;
    for i in 0..p {
        let t = theta[(i, i)];
        if !(t > 0.0) {
            return f64::INFINITY;
        }
        log_term += t.ln();
    }
    let st = s * theta;
    let quad = st.component_mul(&theta.transpose()).sum();
    let mut l1 = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                l1 += theta[(i, j)].abs();
            }
        }
    }
    -2.0 * log_term + quad + lambda * l1 + frobenius_weight * theta.norm_squared()
}

/// Largest violation of the CONCORD stationarity conditions (gradient
/// halved), in the units of `SΘ`.
pub fn concord_kkt_residual(s: &DMatrix<f64>, theta: &DMatrix<f64>, lambda: f64, frobenius_weight: f64) -> f64 {
    let p = theta.nrows();
    let st = s * theta;
    let mut worst = 0.0f64;
    for i in 0..p {
        let t = theta[(i, i)];
        if !(t > 0.0) {
            return f64::INFINITY;
        }
        worst = worst.max((st[(i, i)] + frobenius_weight * t - 1.0 / t).abs());
        for j in (i + 1)..p {
            let g = st[(i, j)] + st[(j, i)] + 2.0 * frobenius_weight * theta[(i, j)];
            worst = worst.max(subgradient_residual(g, theta[(i, j)], lambda));
        }
    }
    worst
}

/// CONCORD, optionally warm-started.
///
/// Stops once the largest coordinate update and the KKT residual are both
/// below `tol`, after rescaling each by the variance scale of S (mean
/// diagonal) so that `tol` is dimensionless. The reported residual is the
/// rescaled KKT residual.
pub fn concord_warm(
    s: &CovarianceEstimate,
    lambda: f64,
    frobenius_weight: f64,
    opts: &SolverOptions,
    warm: Option<&PrecisionEstimate>,
) -> Result<PrecisionEstimate> {
    validate_inputs(s, lambda, opts)?;
    check_warm(s, warm)?;
    if !(frobenius_weight >= 0.0) || !frobenius_weight.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "frobenius weight must be finite and nonnegative, got {frobenius_weight}"
        )));
    }
    let p = s.dim();
    let sm = &s.s;
    let tau = frobenius_weight;
    if (0..p).any(|i| !(sm[(i, i)] + tau > 0.0)) {
        return Err(Error::SingularInput);
    }
    let root_scale = s.variance_scale().sqrt();

    let mut theta = match warm {
        Some(prev) if (0..p).all(|i| prev.omega[(i, i)] > 0.0) => prev.omega.clone(),
        _ => DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 / (sm[(i, i)] + tau).sqrt() } else { 0.0 }),
    };
    let mut trace = vec![concord_objective(sm, &theta, lambda, tau)];
    let mut residual = f64::INFINITY;

    for sweep in 1..=opts.max_iter {
        let mut st = sm * &theta;
        let mut max_update = 0.0f64;

        for i in 0..p {
            for j in (i + 1)..p {
                let a = sm[(i, i)] + sm[(j, j)] + 2.0 * tau;
                let old = theta[(i, j)];
                let c = st[(j, i)] - sm[(j, j)] * old + st[(i, j)] - sm[(i, i)] * old;
                let new = soft_threshold(-c, lambda) / a;
                if new != old {
                    let delta = new - old;
                    theta[(i, j)] = new;
                    theta[(j, i)] = new;
                    for k in 0..p {
                        st[(k, j)] += sm[(k, i)] * delta;
                        st[(k, i)] += sm[(k, j)] * delta;
                    }
                    max_update = max_update.max(delta.abs());
                }
            }
        }
        for i in 0..p {
            let q = sm[(i, i)] + tau;
            let old = theta[(i, i)];
            let b = st[(i, i)] - sm[(i, i)] * old;
            let new = (-b + (b * b + 4.0 * q).sqrt()) / (2.0 * q);
            if new != old {
                let delta = new - old;
                theta[(i, i)] = new;
                for k in 0..p {
                    st[(k, i)] += sm[(k, i)] * delta;
                }
                max_update = max_update.max(delta.abs());
            }
        }

        let f = concord_objective(sm, &theta, lambda, tau);
        if !f.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: sweep });
        }
        trace.push(f);
        residual = concord_kkt_residual(sm, &theta, lambda, tau) / root_scale;
        if max_update * root_scale <= opts.tol && residual <= opts.tol {
            return Ok(finish(s, theta, lambda, tau, sweep, true, trace, residual));
        }
    }
    let partial = finish(s, theta, lambda, tau, opts.max_iter, false, trace, residual);
    Err(Error::NotConverged {
        method: "concord",
        lambda,
        iterations: opts.max_iter,
        residual,
        partial: Box::new(partial),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    s: &CovarianceEstimate,
    omega: DMatrix<f64>,
    lambda: f64,
    frobenius_weight: f64,
    iterations: usize,
    converged: bool,
    objective_trace: Vec<f64>,
    residual: f64,
) -> PrecisionEstimate {
    PrecisionEstimate {
        asset_ids: s.asset_ids.clone(),
        omega,
        method: PrecisionMethod::Concord,
        lambda,
        frobenius_weight,
        iterations,
        converged,
        objective_trace,
        residual,
    }
}
