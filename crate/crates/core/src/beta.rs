//! Comparing beta vectors: angles, dispersion, market volatility and the
//! positivity diagnostics of mean-one betas.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{ImpliedFactorMatrix, Normalization};
use crate::linalg;

pub const TRADING_DAYS: f64 = 252.0;
/// Reporting band for "close to one" betas.
pub const BETA_BAND: (f64, f64) = (0.5, 1.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaNormalization {
    MeanOne,
    Unit,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaVector {
    pub asset_ids: Vec<String>,
    #[serde(with = "linalg::vector")]
    pub values: DVector<f64>,
    pub normalization: BetaNormalization,
    pub source: String,
}

impl BetaVector {
    pub fn raw(asset_ids: Vec<String>, values: DVector<f64>, source: &str) -> Result<Self> {
        if asset_ids.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "beta vector",
                expected: asset_ids.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            asset_ids,
            values,
            normalization: BetaNormalization::Raw,
            source: source.to_string(),
        })
    }

    /// Rescaled to mean one.
    pub fn mean_one(&self) -> Result<Self> {
        let mean = self.values.mean();
        if mean == 0.0 || !mean.is_finite() {
            return Err(Error::ZeroMean);
        }
        Ok(Self {
            values: &self.values / mean,
            normalization: BetaNormalization::MeanOne,
            ..self.clone()
        })
    }

    /// Rescaled to unit Euclidean norm.
    pub fn unit(&self) -> Result<Self> {
        let norm = self.values.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            values: &self.values / norm,
            normalization: BetaNormalization::Unit,
            ..self.clone()
        })
    }

    /// First column of an implied factor matrix.
    pub fn from_implied(imp: &ImpliedFactorMatrix, source: &str) -> Self {
        Self {
            asset_ids: imp.asset_ids.clone(),
            values: imp.b_imp.column(0).into_owned(),
            normalization: match imp.normalization {
                Normalization::MeanOne => BetaNormalization::MeanOne,
                Normalization::Unit => BetaNormalization::Unit,
            },
            source: source.to_string(),
        }
    }
}

/// Angle in degrees between two beta vectors, in `[0, 180]`.
pub fn angle_degrees(a: &BetaVector, b: &BetaVector) -> Result<f64> {
    if a.asset_ids != b.asset_ids {
        return Err(Error::AssetMismatch("beta vectors"));
    }
    let (na, nb) = (a.values.norm(), b.values.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let cos = (a.values.dot(&b.values) / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees().clamp(0.0, 180.0))
}

/// `d_v = √((1/p) Σ (b_i / b̄ − 1)²)`.
pub fn dispersion(b: &BetaVector) -> Result<f64> {
    let mean = b.values.mean();
    if mean == 0.0 || !mean.is_finite() {
        return Err(Error::ZeroMean);
    }
    let p = b.values.len() as f64;
    let ss: f64 = b.values.iter().map(|v| (v / mean - 1.0).powi(2)).sum();
    Ok((ss / p).sqrt())
}

/// Inputs of the annualized market volatility.
#[derive(Debug, Clone, Copy)]
pub enum MarketVolInput<'a> {
    /// First row of the in-sample factor matrix.
    ExogenousFirstFactor { factor: &'a [f64] },
    /// Market series `βᵀY / (βᵀβ)` built from a beta and the returns.
    Projected { beta: &'a DVector<f64>, returns: &'a DMatrix<f64> },
}

fn sample_variance(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData("variance needs at least 2 observations".into()));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    Ok(x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64)
}

/// `√(var(market series) · trading_days) · 100`, with the sample variance
/// (divisor n − 1). The projected series `βᵀY/(βᵀβ)` of `cβ` is the series
/// of β divided by c, so the result scales as `1/|c|`; callers comparing
/// models should pass betas with a common normalization.
pub fn annualized_market_vol(input: MarketVolInput<'_>, trading_days: f64) -> Result<f64> {
    let series: Vec<f64> = match input {
        MarketVolInput::ExogenousFirstFactor { factor } => factor.to_vec(),
        MarketVolInput::Projected { beta, returns } => {
            if beta.len() != returns.nrows() {
                return Err(Error::DimensionMismatch {
                    context: "beta and returns",
                    expected: returns.nrows(),
                    actual: beta.len(),
                });
            }
            let bb = beta.norm_squared();
            if bb == 0.0 {
                return Err(Error::ZeroBeta);
            }
            (returns.transpose() * beta / bb).iter().copied().collect()
        }
    };
    Ok((sample_variance(&series)? * trading_days).sqrt() * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaDiagnostics {
    pub fraction_positive: f64,
    pub fraction_within_band: f64,
}

/// Share of positive betas and share inside [`BETA_BAND`]. Expects a
/// mean-one vector.
pub fn beta_diagnostics(b: &BetaVector) -> BetaDiagnostics {
    let p = b.values.len().max(1) as f64;
    let pos = b.values.iter().filter(|v| **v > 0.0).count() as f64;
    let band = b
        .values
        .iter()
        .filter(|v| **v >= BETA_BAND.0 && **v <= BETA_BAND.1)
        .count() as f64;
    BetaDiagnostics {
        fraction_positive: pos / p,
        fraction_within_band: band / p,
    }
}
