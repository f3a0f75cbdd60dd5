//! The graphical representation model and its variance decompositions.
//!
//! Writing each return as a linear combination of the others plus a
//! residual, `Y = AY + E` with `diag(A) = 0`, the least-squares coefficient
//! matrix is `A = I − DΩ` where `D = diag(Ω)⁻¹`. Row i of A holds the
//! regression coefficients of asset i on every other asset, D holds the
//! residual variances, and `Var(AY) = Σ − 2D + DΩD` is the part of each
//! variance explained by the rest of the market.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::ReturnsPanel;
use crate::precision::PrecisionEstimate;

/// `A = I − DΩ` together with D and the estimate it was built from.
///
/// Serializes as the source precision estimate plus the derived `a` and `d`;
/// deserialization rebuilds A and D from Ω and rejects stored values that
/// disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GrmWire", into = "GrmWire")]
pub struct GrmModel {
    asset_ids: Vec<String>,
    a: DMatrix<f64>,
    d: DVector<f64>,
    omega: PrecisionEstimate,
}

impl GrmModel {
    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    /// Coefficient matrix, zero diagonal.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Residual variances `1/ω_ii`.
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn omega(&self) -> &PrecisionEstimate {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

#[derive(Serialize, Deserialize)]
struct GrmWire {
    asset_ids: Vec<String>,
    #[serde(with = "linalg::rows")]
    a: DMatrix<f64>,
    #[serde(with = "linalg::vector")]
    d: DVector<f64>,
    omega: PrecisionEstimate,
}

impl From<GrmModel> for GrmWire {
    fn from(m: GrmModel) -> Self {
        Self {
            asset_ids: m.asset_ids,
            a: m.a,
            d: m.d,
            omega: m.omega,
        }
    }
}

impl TryFrom<GrmWire> for GrmModel {
    type Error = String;

    fn try_from(w: GrmWire) -> std::result::Result<Self, String> {
        let model = build_grm(&w.omega).map_err(|e| e.to_string())?;
        if w.asset_ids != model.asset_ids {
            return Err("asset ids disagree with the precision estimate".into());
        }
        if w.a.shape() != model.a.shape() || (&w.a - &model.a).amax() > 1e-12 {
            return Err("stored A is not I − DΩ".into());
        }
        if w.d.len() != model.d.len() || (&w.d - &model.d).amax() > 1e-12 * model.d.amax().max(1.0) {
            return Err("stored D is not diag(Ω)⁻¹".into());
        }
        Ok(model)
    }
}

/// Per-asset split of the total variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub asset_ids: Vec<String>,
    /// `σ_ii`.
    pub total: Vec<f64>,
    /// `(AΣAᵀ)_ii`.
    pub endogenous: Vec<f64>,
    /// `1/ω_ii`.
    pub residual: Vec<f64>,
}

impl VarianceDecomposition {
    /// Largest `|total − endogenous − residual|`; zero up to rounding when
    /// Σ is exactly Ω⁻¹.
    pub fn identity_gap(&self) -> f64 {
        self.total
            .iter()
            .zip(&self.endogenous)
            .zip(&self.residual)
            .map(|((t, e), r)| (t - e - r).abs())
            .fold(0.0, f64::max)
    }
}

/// Partial covariance of a pair given all remaining assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialCovariance {
    pub i: usize,
    pub j: usize,
    /// 2×2 Schur complement `Σ_II − Σ_IJ Σ_JJ⁻¹ Σ_JI` for `I = {i, j}`.
    pub pi: [[f64; 2]; 2],
    /// Partial correlation `π_ij / √(π_ii π_jj)`.
    pub rho: f64,
    /// Endogenous variance of asset i, `σ_ii − π_ii(1 − ϱ²)`.
    pub nu: f64,
    /// Endogenous variance of asset j.
    pub nu_partner: f64,
}

/// Builds the GRM: `a_ij = −ω_ij/ω_ii` off the diagonal, `D_i = 1/ω_ii`.
pub fn build_grm(omega: &PrecisionEstimate) -> Result<GrmModel> {
    let p = omega.dim();
    let w = &omega.omega;
    for i in 0..p {
        let v = w[(i, i)];
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveDiagonal { index: i, value: v });
        }
    }
    let a = DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { -w[(i, j)] / w[(i, i)] });
    let d = DVector::from_fn(p, |i, _| 1.0 / w[(i, i)]);
    Ok(GrmModel {
        asset_ids: omega.asset_ids.clone(),
        a,
        d,
        omega: omega.clone(),
    })
}

fn check_dims(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Splits each `σ_ii` of the supplied Σ into endogenous and residual parts.
pub fn decompose_variance(grm: &GrmModel, sigma: &CovarianceEstimate) -> Result<VarianceDecomposition> {
    check_dims("variance decomposition", grm.dim(), sigma.dim())?;
    let s = &sigma.s;
    let a = grm.a();
    let endo = a * s * a.transpose();
    Ok(VarianceDecomposition {
        asset_ids: grm.asset_ids.clone(),
        total: s.diagonal().iter().copied().collect(),
        endogenous: endo.diagonal().iter().copied().collect(),
        residual: grm.d.iter().copied().collect(),
    })
}

/// Residual covariance `Var(E) = DΩD`; entry (i, j) is `ω_ij/(ω_ii ω_jj)`.
pub fn residual_covariance(grm: &GrmModel) -> DMatrix<f64> {
    let p = grm.dim();
    let w = &grm.omega.omega;
    DMatrix::from_fn(p, p, |i, j| grm.d[i] * w[(i, j)] * grm.d[j])
}

/// Endogenous prediction `Ŷ = AY` for each column of a (centered) panel.
pub fn predict(grm: &GrmModel, panel: &ReturnsPanel) -> Result<ReturnsPanel> {
    check_dims("GRM prediction", grm.dim(), panel.n_assets())?;
    if panel.asset_ids() != grm.asset_ids.as_slice() {
        return Err(Error::AssetMismatch("GRM model and panel"));
    }
    Ok(panel.with_prediction(grm.a() * panel.values()))
}

/// GRM of the sub-market `subset` conditional on the remaining assets,
/// built from the block `Ω_II`. Its coefficient matrix equals the
/// `I × I` block of the full model's A.
pub fn conditional_grm(omega: &PrecisionEstimate, subset: &[usize]) -> Result<GrmModel> {
    let p = omega.dim();
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut idx = subset.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if let Some(&bad) = idx.iter().find(|&&i| i >= p) {
        return Err(Error::InvalidParameter(format!("index {bad} out of range for {p} assets")));
    }
    if idx.len() == p {
        return Err(Error::FullSubset);
    }
    let block = linalg::submatrix(&omega.omega, &idx, &idx);
    let ids = idx.iter().map(|&i| omega.asset_ids[i].clone()).collect();
    let mut sub = PrecisionEstimate::from_omega(ids, block, omega.method);
    sub.lambda = omega.lambda;
    sub.frobenius_weight = omega.frobenius_weight;
    build_grm(&sub)
}

/// Partial covariance, partial correlation and endogenous variances of the
/// pair `(i, j)` from the Schur complement of Σ. With two assets the
/// conditioning set is empty and `Π = Σ`.
pub fn partial_pair(sigma: &CovarianceEstimate, i: usize, j: usize) -> Result<PartialCovariance> {
    let p = sigma.dim();
    if i == j || i >= p || j >= p {
        return Err(Error::InvalidParameter(format!("need two distinct indices below {p}, got ({i}, {j})")));
    }
    let s = &sigma.s;
    let pair = [i, j];
    let mut pi = linalg::submatrix(s, &pair, &pair);
    let rest: Vec<usize> = (0..p).filter(|&k| k != i && k != j).collect();
    if !rest.is_empty() {
        let s_jj = linalg::submatrix(s, &rest, &rest);
        let s_ij = linalg::submatrix(s, &pair, &rest);
        let inv = linalg::spd_inverse(&s_jj).ok_or(Error::SingularBlock)?;
        pi -= &s_ij * inv * s_ij.transpose();
        pi = linalg::symmetrize(&pi);
    }
    let denom = (pi[(0, 0)] * pi[(1, 1)]).sqrt();
    let rho = if denom > 0.0 { (pi[(0, 1)] / denom).clamp(-1.0, 1.0) } else { 0.0 };
    let keep = 1.0 - rho * rho;
    Ok(PartialCovariance {
        i,
        j,
        pi: [[pi[(0, 0)], pi[(0, 1)]], [pi[(1, 0)], pi[(1, 1)]]],
        rho,
        nu: s[(i, i)] - pi[(0, 0)] * keep,
        nu_partner: s[(j, j)] - pi[(1, 1)] * keep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::PrecisionMethod;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn exact(sigma: DMatrix<f64>) -> (CovarianceEstimate, PrecisionEstimate) {
        let c = CovarianceEstimate::from_matrix(sigma).unwrap();
        let o = PrecisionEstimate::exact_inverse(&c).unwrap();
        (c, o)
    }

    fn example_one() -> (CovarianceEstimate, PrecisionEstimate) {
        exact(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]))
    }

    fn spd(p: usize, seed: &[f64]) -> DMatrix<f64> {
        let m = DMatrix::from_fn(p, p, |i, j| seed[(i * p + j) % seed.len()]);
        &m * m.transpose() + DMatrix::identity(p, p) * 0.5
    }

    #[test]
    fn identity_precision_has_no_structure() {
        let o = PrecisionEstimate::from_omega(crate::panel::default_ids(3), DMatrix::identity(3, 3), PrecisionMethod::ExactInverse);
        let g = build_grm(&o).unwrap();
        assert_eq!(g.a(), &DMatrix::zeros(3, 3));
        assert_eq!(g.d().as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(residual_covariance(&g), DMatrix::identity(3, 3));
    }

    #[test]
    fn two_asset_closed_form() {
        let (c, o) = example_one();
        let g = build_grm(&o).unwrap();
        assert_abs_diff_eq!(g.a()[(0, 1)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g.a()[(1, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g.d()[0], 0.75, epsilon = 1e-12);
        let v = decompose_variance(&g, &c).unwrap();
        assert_abs_diff_eq!(v.endogenous[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(v.residual[1], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(v.total[0], 1.0, epsilon = 1e-12);
        // (1 − ρ²)[[σ11, −σ12], [−σ12, σ22]]
        let e = residual_covariance(&g);
        let expected = DMatrix::from_row_slice(2, 2, &[0.75, -0.375, -0.375, 0.75]);
        assert!((e - expected).amax() < 1e-12);
    }

    #[test]
    fn nonpositive_diagonal_is_rejected() {
        let o = PrecisionEstimate::from_omega(
            crate::panel::default_ids(2),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.1, 1.0]),
            PrecisionMethod::Concord,
        );
        assert!(matches!(build_grm(&o), Err(Error::NonPositiveDiagonal { index: 0, .. })));
    }

    #[test]
    fn prediction_by_hand() {
        let (_, o) = example_one();
        let g = build_grm(&o).unwrap();
        let panel = ReturnsPanel::from_matrix(DMatrix::from_row_slice(2, 1, &[2.0, 4.0])).unwrap();
        let yhat = predict(&g, &panel).unwrap();
        assert!(yhat.is_prediction());
        assert_abs_diff_eq!(yhat.values()[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(yhat.values()[(1, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_subsets() {
        let (_, o) = exact(spd(6, &[0.3, -0.7, 0.2, 0.9, -0.1, 0.4, 0.8]));
        let full = build_grm(&o).unwrap();
        let cond = conditional_grm(&o, &[0, 1, 2]).unwrap();
        let block = full.a().view((0, 0), (3, 3)).into_owned();
        assert!((cond.a() - block).amax() < 1e-12);
        assert_eq!(conditional_grm(&o, &[4]).unwrap().a(), &DMatrix::zeros(1, 1));
        assert!(matches!(conditional_grm(&o, &[]), Err(Error::EmptySubset)));
        assert!(matches!(conditional_grm(&o, &[0, 1, 2, 3, 4, 5]), Err(Error::FullSubset)));
    }

    #[test]
    fn partial_pair_routes_agree() {
        let diag = CovarianceEstimate::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]))).unwrap();
        let pc = partial_pair(&diag, 0, 1).unwrap();
        assert_eq!((pc.pi[0][1], pc.rho, pc.nu), (0.0, 0.0, 0.0));

        let (c, o) = exact(spd(3, &[0.5, -0.2, 0.7, 0.1]));
        let pc = partial_pair(&c, 0, 1).unwrap();
        let w = &o.omega;
        let rho = -w[(0, 1)] / (w[(0, 0)] * w[(1, 1)]).sqrt();
        assert_abs_diff_eq!(pc.rho, rho, epsilon = 1e-10);

        let (c, _) = example_one();
        let pc = partial_pair(&c, 0, 1).unwrap();
        assert_abs_diff_eq!(pc.rho, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pc.nu, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn json_round_trip_checks_consistency() {
        let (_, o) = example_one();
        let g = build_grm(&o).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: GrmModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["a"][0][1] = serde_json::json!(0.9);
        assert!(serde_json::from_value::<GrmModel>(value).is_err());
    }

    proptest! {
        #[test]
        fn decomposition_and_uncorrelated_residuals(
            seed in proptest::collection::vec(-1.0f64..1.0, 25),
        ) {
            let sigma = spd(5, &seed);
            let (c, o) = exact(sigma.clone());
            let g = build_grm(&o).unwrap();
            let v = decompose_variance(&g, &c).unwrap();
            prop_assert!(v.identity_gap() <= 1e-10 * sigma.amax().max(1.0));

            // Cov(E, Y) = (I − A)Σ is diagonal and equals D.
            let cov_ey = (DMatrix::identity(5, 5) - g.a()) * &sigma;
            for i in 0..5 {
                for j in 0..5 {
                    let target = if i == j { g.d()[i] } else { 0.0 };
                    prop_assert!((cov_ey[(i, j)] - target).abs() <= 1e-10 * sigma.amax().max(1.0));
                }
            }

            // AΣAᵀ = Σ − 2D + DΩD.
            let lhs = g.a() * &sigma * g.a().transpose();
            let rhs = &sigma - DMatrix::from_diagonal(g.d()) * 2.0 + residual_covariance(&g);
            prop_assert!((lhs - rhs).amax() <= 1e-10 * sigma.amax().max(1.0));
        }
    }
}
