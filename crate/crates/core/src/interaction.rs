//! Interaction-weight models: spatial weights and the mixed model
//! `Y = ρWY + BX + G`.
//!
//! ρ is chosen by least squares on the factor-residualized returns
//! `R = Y_I(I − X_Iᵀ(X_I X_Iᵀ)⁻¹X_I)`, minimizing `‖(I − κW)R‖²_F` over a
//! grid on `[ζ, η]` followed by golden-section refinement around the best
//! grid point. Points where `I − κW` is numerically singular are skipped.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::SampleInfo;
use crate::grm::GrmModel;
use crate::linalg;
use crate::panel::{center, DistanceMatrix, FactorPanel, ReturnsPanel};

pub const DEFAULT_BOUNDS: (f64, f64) = (-2.0, 4.0);
pub const DEFAULT_GRID_SIZE: usize = 601;
const GOLDEN_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    Spatial,
    GrmA,
}

/// Zero-diagonal interaction matrix W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionWeights {
    pub asset_ids: Vec<String>,
    #[serde(with = "linalg::rows")]
    pub w: DMatrix<f64>,
    pub source: WeightSource,
}

impl InteractionWeights {
    /// Validates a zero diagonal; spatial weights must also be nonnegative
    /// with unit row sums.
    pub fn new(asset_ids: Vec<String>, w: DMatrix<f64>, source: WeightSource) -> Result<Self> {
        let p = asset_ids.len();
        if w.nrows() != p || w.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: "interaction weights",
                expected: p,
                actual: w.nrows(),
            });
        }
        for i in 0..p {
            if w[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter(format!("W[{i},{i}] must be zero")));
            }
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("interaction weights must be finite".into()));
        }
        if source == WeightSource::Spatial {
            if w.iter().any(|v| *v < 0.0) {
                return Err(Error::InvalidParameter("spatial weights must be nonnegative".into()));
            }
            for i in 0..p {
                let sum = w.row(i).sum();
                if p > 1 && (sum - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidParameter(format!("spatial row {i} sums to {sum}")));
                }
            }
        }
        Ok(Self { asset_ids, w, source })
    }

    /// Uses the GRM coefficient matrix Â as the interaction matrix.
    pub fn from_grm(grm: &GrmModel) -> Self {
        Self {
            asset_ids: grm.asset_ids().to_vec(),
            w: grm.a().clone(),
            source: WeightSource::GrmA,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }
}

/// Row-normalized inverse distances: `W_ij = (s_i d_ij)⁻¹` with
/// `s_i = Σ_{j≠i} d_ij⁻¹`.
pub fn spatial_weights(d: &DistanceMatrix) -> Result<InteractionWeights> {
    let m = d.matrix();
    let p = m.nrows();
    for i in 0..p {
        for j in 0..p {
            if i != j && m[(i, j)] <= 0.0 {
                return Err(Error::ZeroDistance { i, j });
            }
        }
    }
    let mut w = DMatrix::zeros(p, p);
    for i in 0..p {
        let s: f64 = (0..p).filter(|&j| j != i).map(|j| 1.0 / m[(i, j)]).sum();
        for j in 0..p {
            if j != i {
                w[(i, j)] = 1.0 / (s * m[(i, j)]);
            }
        }
    }
    Ok(InteractionWeights {
        asset_ids: d.asset_ids().to_vec(),
        w,
        source: WeightSource::Spatial,
    })
}

/// One evaluated search point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub kappa: f64,
    pub objective: f64,
}

/// Fitted mixed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedModel {
    pub rho: f64,
    pub asset_ids: Vec<String>,
    pub factor_names: Vec<String>,
    #[serde(with = "linalg::rows")]
    pub b: DMatrix<f64>,
    pub weights: InteractionWeights,
    pub search_bounds: (f64, f64),
    pub objective_value: f64,
    /// Feasible grid points in grid order, followed by the refined optimum
    /// when refinement improved on the grid.
    pub search_trace: Vec<SearchPoint>,
    pub fitted_on: SampleInfo,
}

/// Quadratic objective `‖R‖² − 2κ⟨R, WR⟩ + κ²‖WR‖²`.
#[derive(Debug, Clone, Copy)]
struct Quadratic {
    rr: f64,
    rp: f64,
    pp: f64,
}

impl Quadratic {
    fn eval(&self, kappa: f64) -> f64 {
        self.rr - 2.0 * kappa * self.rp + kappa * kappa * self.pp
    }

    fn is_flat(&self) -> bool {
        self.pp <= 1e-24 * self.rr.max(f64::MIN_POSITIVE)
    }
}

fn feasible(w: &DMatrix<f64>, kappa: f64) -> bool {
    let p = w.nrows();
    let m = DMatrix::identity(p, p) - w * kappa;
    linalg::condition(&m) < linalg::MAX_CONDITION
}

fn check_inputs(panel: &ReturnsPanel, factors: &FactorPanel, weights: &InteractionWeights) -> Result<()> {
    factors
        .check_aligned(panel)
        .map_err(|e| Error::Misalignment(e.to_string()))?;
    if weights.dim() != panel.n_assets() {
        return Err(Error::DimensionMismatch {
            context: "interaction weights",
            expected: panel.n_assets(),
            actual: weights.dim(),
        });
    }
    if weights.asset_ids != panel.asset_ids() {
        return Err(Error::AssetMismatch("interaction weights and panel"));
    }
    Ok(())
}

/// Fits ρ and the exposures of the mixed model. With `ζ = η` the grid is
/// the single point ζ.
pub fn fit_mixed(
    panel: &ReturnsPanel,
    factors: &FactorPanel,
    weights: &InteractionWeights,
    bounds: (f64, f64),
    grid_size: usize,
) -> Result<MixedModel> {
    check_inputs(panel, factors, weights)?;
    let (lo, hi) = bounds;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidParameter(format!("invalid search bounds ({lo}, {hi})")));
    }
    if grid_size == 0 {
        return Err(Error::InvalidParameter("grid size must be positive".into()));
    }
    let y = center(panel);
    let x = factors.centered();
    let xv = x.values();
    let gram_inv = linalg::spd_inverse(&(xv * xv.transpose())).ok_or(Error::SingularFactorGram)?;
    let yv = y.values();
    let r = yv - (yv * xv.transpose() * &gram_inv) * xv;
    let wr = &weights.w * &r;
    let q = Quadratic {
        rr: r.norm_squared(),
        rp: r.dot(&wr),
        pp: wr.norm_squared(),
    };

    let n_grid = if lo == hi { 1 } else { grid_size.max(2) };
    let grid: Vec<f64> = (0..n_grid)
        .map(|g| if n_grid == 1 { lo } else { lo + (hi - lo) * g as f64 / (n_grid - 1) as f64 })
        .collect();
    let feasibility: Vec<bool> = grid.par_iter().map(|&k| feasible(&weights.w, k)).collect();
    let mut trace: Vec<SearchPoint> = grid
        .iter()
        .zip(&feasibility)
        .filter(|(_, ok)| **ok)
        .map(|(&kappa, _)| SearchPoint {
            kappa,
            objective: q.eval(kappa),
        })
        .collect();
    if trace.is_empty() {
        return Err(Error::NoFeasiblePoint);
    }

    let (rho, objective_value) = if q.is_flat() {
        // No interaction signal: pick the feasible point nearest zero.
        let best = trace
            .iter()
            .min_by(|a, b| a.kappa.abs().total_cmp(&b.kappa.abs()))
            .copied()
            .expect("nonempty trace");
        let rho = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { best.kappa };
        (rho, q.eval(rho))
    } else {
        let mut best = 0;
        for (idx, pt) in trace.iter().enumerate() {
            if pt.objective < trace[best].objective {
                best = idx;
            }
        }
        let grid_best = trace[best];
        let step = if n_grid > 1 { (hi - lo) / (n_grid - 1) as f64 } else { 0.0 };
        let a = (grid_best.kappa - step).max(lo);
        let b = (grid_best.kappa + step).min(hi);
        let refined = golden_section(|k| q.eval(k), a, b);
        let value = q.eval(refined);
        if value < grid_best.objective && feasible(&weights.w, refined) {
            trace.push(SearchPoint {
                kappa: refined,
                objective: value,
            });
            (refined, value)
        } else {
            (grid_best.kappa, grid_best.objective)
        }
    };

    let p = panel.n_assets();
    let lhs = (DMatrix::identity(p, p) - &weights.w * rho) * yv;
    let b = lhs * xv.transpose() * gram_inv;
    Ok(MixedModel {
        rho,
        asset_ids: panel.asset_ids().to_vec(),
        factor_names: factors.factor_names().to_vec(),
        b,
        weights: weights.clone(),
        search_bounds: bounds,
        objective_value,
        search_trace: trace,
        fitted_on: SampleInfo::of(panel),
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `Ŷ_O = ρ̂ W Y_O + B̂ X_O`.
pub fn predict_mixed(model: &MixedModel, out_panel: &ReturnsPanel, out_factors: &FactorPanel) -> Result<ReturnsPanel> {
    out_factors
        .check_aligned(out_panel)
        .map_err(|e| Error::Misalignment(e.to_string()))?;
    if out_panel.asset_ids() != model.asset_ids.as_slice() {
        return Err(Error::AssetMismatch("mixed model and panel"));
    }
    if out_factors.n_factors() != model.b.ncols() {
        return Err(Error::Misalignment(format!(
            "model has {} factors, panel has {}",
            model.b.ncols(),
            out_factors.n_factors()
        )));
    }
    let yhat = &model.weights.w * out_panel.values() * model.rho + &model.b * out_factors.centered().values();
    Ok(out_panel.with_prediction(yhat))
}
