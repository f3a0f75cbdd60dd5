//! Synthetic markets with known ground truth, and brute-force oracles.
//!
//! Sparse structures define the precision matrix Ω directly, with the
//! diagonal set to `1 + Σ_j |ω_ij|` unless given, which makes Ω diagonally
//! dominant and so positive definite. Factor structures define Σ through
//! loadings, factor covariance and idiosyncratic variances. Sampling is
//! Gaussian from a ChaCha20 stream seeded by the spec, so a spec reproduces
//! its panel bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{default_ids, FactorPanel, ReturnsPanel};

/// Largest dimension accepted by [`brute_force_a`].
pub const BRUTE_FORCE_MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    /// `ω_{i,i+1} = off`.
    Chain {
        off: f64,
        #[serde(default)]
        diag: Option<f64>,
    },
    /// `ω_ij = off` for `1 ≤ |i − j| ≤ width`.
    Banded {
        width: usize,
        off: f64,
        #[serde(default)]
        diag: Option<f64>,
    },
    /// Each pair is an edge with probability `density`; edge values are
    /// uniform on `±[0.1, 0.5]` with a random sign.
    RandomSparse { density: f64 },
    /// `Y = βX + Z` with `var(X) = factor_var` and `Var(Z) = idio_var·I`.
    OneFactor {
        beta: Vec<f64>,
        idio_var: f64,
        #[serde(default = "unit")]
        factor_var: f64,
    },
    /// `Σ = BVBᵀ + diag(Δ)`; `b` has p rows of length k.
    KFactor {
        b: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        delta: Vec<f64>,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub p: usize,
    pub n: usize,
    pub structure: Structure,
    pub seed: u64,
}

/// Population quantities behind a synthetic panel.
#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    /// Present for the sparse structures.
    pub omega: Option<DMatrix<f64>>,
    pub sigma: DMatrix<f64>,
    /// Loadings, factor covariance and idiosyncratic variances of the
    /// factor structures.
    pub b: Option<DMatrix<f64>>,
    pub v: Option<DMatrix<f64>>,
    pub delta: Option<DVector<f64>>,
    /// Realized factor series, aligned with the panel.
    pub factors: Option<FactorPanel>,
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub panel: ReturnsPanel,
    pub truth: SyntheticTruth,
}

fn finish_sparse(mut omega: DMatrix<f64>, diag: Option<f64>) -> Result<DMatrix<f64>> {
    let p = omega.nrows();
    for i in 0..p {
        omega[(i, i)] = match diag {
            Some(d) => d,
            None => 1.0 + (0..p).filter(|&j| j != i).map(|j| omega[(i, j)].abs()).sum::<f64>(),
        };
    }
    if omega.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("precision matrix".into()));
    }
    Ok(omega)
}

fn matrix_from_rows(rows: &[Vec<f64>], cols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter(format!("{what} rows must all have length {cols}")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn normal_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Column-major fill: all assets of period 0, then period 1, ...
    DMatrix::from_iterator(rows, cols, (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Draws a Gaussian panel from the spec and returns it with its truth.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticMarket> {
    let (p, n) = (spec.p, spec.n);
    if p < 2 || n < 2 {
        return Err(Error::InvalidParameter(format!("need p ≥ 2 and n ≥ 2, got p = {p}, n = {n}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let ids = default_ids(p);
    match &spec.structure {
        Structure::Chain { .. } | Structure::Banded { .. } | Structure::RandomSparse { .. } => {
            let mut omega = DMatrix::zeros(p, p);
            let diag = match &spec.structure {
                Structure::Chain { off, diag } => {
                    for i in 0..p - 1 {
                        omega[(i, i + 1)] = *off;
                        omega[(i + 1, i)] = *off;
                    }
                    *diag
                }
                Structure::Banded { width, off, diag } => {
                    if *width == 0 {
                        return Err(Error::InvalidParameter("band width must be at least 1".into()));
                    }
                    for i in 0..p {
                        for j in (i + 1)..p.min(i + width + 1) {
                            omega[(i, j)] = *off;
                            omega[(j, i)] = *off;
                        }
                    }
                    *diag
                }
                Structure::RandomSparse { density } => {
                    if !(0.0..=1.0).contains(density) {
                        return Err(Error::InvalidParameter(format!("density {density} outside [0, 1]")));
                    }
                    for i in 0..p {
                        for j in (i + 1)..p {
                            if rng.random::<f64>() < *density {
                                let magnitude = rng.random_range(0.1..0.5);
                                let value = if rng.random::<bool>() { magnitude } else { -magnitude };
                                omega[(i, j)] = value;
                                omega[(j, i)] = value;
                            }
                        }
                    }
                    None
                }
                _ => unreachable!("sparse structures only"),
            };
            let omega = finish_sparse(omega, diag)?;
            let l = omega.clone().cholesky().expect("checked positive definite").l();
            // Ω = LLᵀ, so L⁻ᵀz has covariance Ω⁻¹.
            let z = normal_matrix(&mut rng, p, n);
            let values = l
                .transpose()
                .solve_upper_triangular(&z)
                .ok_or_else(|| Error::NotPositiveDefinite("precision factor".into()))?;
            let sigma = crate::linalg::spd_inverse(&omega).ok_or_else(|| Error::NotPositiveDefinite("precision matrix".into()))?;
            let panel = ReturnsPanel::with_default_dates(ids, values)?;
            Ok(SyntheticMarket {
                panel,
                truth: SyntheticTruth {
                    omega: Some(omega),
                    sigma,
                    b: None,
                    v: None,
                    delta: None,
                    factors: None,
                },
            })
        }
        Structure::OneFactor { beta, idio_var, factor_var } => {
            let b = DMatrix::from_row_slice(beta.len(), 1, beta);
            let v = DMatrix::from_element(1, 1, *factor_var);
            let delta = DVector::from_element(p, *idio_var);
            factor_market(&mut rng, ids, n, b, v, delta)
        }
        Structure::KFactor { b, v, delta } => {
            let k = v.len();
            let b = matrix_from_rows(b, k, "B")?;
            let v = matrix_from_rows(v, k, "V")?;
            factor_market(&mut rng, ids, n, b, v, DVector::from_row_slice(delta))
        }
    }
}

fn factor_market(
    rng: &mut ChaCha20Rng,
    ids: Vec<String>,
    n: usize,
    b: DMatrix<f64>,
    v: DMatrix<f64>,
    delta: DVector<f64>,
) -> Result<SyntheticMarket> {
    let p = ids.len();
    let k = v.nrows();
    if b.nrows() != p || b.ncols() != k || delta.len() != p {
        return Err(Error::InvalidParameter(format!(
            "factor structure needs B of {p}×{k} and Δ of length {p}, got {}×{} and {}",
            b.nrows(),
            b.ncols(),
            delta.len()
        )));
    }
    if delta.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::NotPositiveDefinite("idiosyncratic variances must be positive".into()));
    }
    let v_chol = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("factor covariance".into()))?;
    let sigma = &b * &v * b.transpose() + DMatrix::from_diagonal(&delta);

    let x = v_chol.l() * normal_matrix(rng, k, n);
    let mut values = &b * &x;
    let noise = normal_matrix(rng, p, n);
    for t in 0..n {
        for i in 0..p {
            values[(i, t)] += delta[i].sqrt() * noise[(i, t)];
        }
    }
    let panel = ReturnsPanel::with_default_dates(ids, values)?;
    let names = (1..=k).map(|j| format!("F{j}")).collect();
    let factors = FactorPanel::aligned_with(&panel, names, x)?;
    Ok(SyntheticMarket {
        panel,
        truth: SyntheticTruth {
            omega: None,
            sigma,
            b: Some(b),
            v: Some(v),
            delta: Some(delta),
            factors: Some(factors),
        },
    })
}

/// Minimizer of `E|Y − MY|²` over zero-diagonal M, found row by row from
/// the normal equations `Σ_{−i,−i} m_i = Σ_{−i,i}`.
pub fn brute_force_a(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: "brute-force covariance",
            expected: p,
            actual: sigma.ncols(),
        });
    }
    if p > BRUTE_FORCE_MAX_DIM {
        return Err(Error::InvalidParameter(format!("brute-force oracle supports p ≤ {BRUTE_FORCE_MAX_DIM}, got {p}")));
    }
    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        let others: Vec<usize> = (0..p).filter(|&j| j != i).collect();
        if others.is_empty() {
            continue;
        }
        let lhs = crate::linalg::submatrix(sigma, &others, &others);
        let rhs = DVector::from_iterator(others.len(), others.iter().map(|&j| sigma[(j, i)]));
        let m = lhs.lu().solve(&rhs).ok_or(Error::SingularSubmatrix { row: i })?;
        for (pos, &j) in others.iter().enumerate() {
            a[(i, j)] = m[pos];
        }
    }
    Ok(a)
}

/// `β = Σw/(wᵀΣw)`, the betas with respect to the portfolio w.
pub fn market_beta(w_m: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    if w_m.len() != sigma.nrows() {
        return Err(Error::DimensionMismatch {
            context: "market weights",
            expected: sigma.nrows(),
            actual: w_m.len(),
        });
    }
    let sw = sigma * w_m;
    let var = w_m.dot(&sw);
    if w_m.len() < 2 || var == 0.0 || !var.is_finite() {
        return Err(Error::DegenerateMarket);
    }
    Ok(sw / var)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapmCheck {
    /// `w_mᵀβ`, one for the market portfolio.
    pub w_beta: f64,
    /// Largest off-diagonal magnitude of `Var(Z_β)`.
    pub max_offdiag: f64,
    /// `‖w_mᵀ Var(Z_β)‖_∞`, zero when β comes from w_m.
    pub w_var_z: f64,
}

/// Residual covariance `Var(Z_β) = (I − βwᵀ)Σ(I − βwᵀ)ᵀ` of the one-factor
/// decomposition against the portfolio w.
pub fn capm_residual_check(beta: &DVector<f64>, w_m: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<CapmCheck> {
    let p = sigma.nrows();
    if beta.len() != p || w_m.len() != p {
        return Err(Error::DimensionMismatch {
            context: "beta and market weights",
            expected: p,
            actual: beta.len().min(w_m.len()),
        });
    }
    let var = w_m.dot(&(sigma * w_m));
    if p < 2 || var == 0.0 || !var.is_finite() {
        return Err(Error::DegenerateMarket);
    }
    let proj = DMatrix::identity(p, p) - beta * w_m.transpose();
    let var_z = &proj * sigma * proj.transpose();
    let mut max_offdiag: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                max_offdiag = max_offdiag.max(var_z[(i, j)].abs());
            }
        }
    }
    let w_var_z = (w_m.transpose() * &var_z).amax();
    Ok(CapmCheck {
        w_beta: w_m.dot(beta),
        max_offdiag,
        w_var_z,
    })
}
