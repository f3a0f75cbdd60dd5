//! Out-of-sample scoring and rolling re-calibration.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::ReturnsPanel;

/// Scores of one model on one held-out panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_label: String,
    pub rmse: f64,
    /// RMSE relative to the RMS of the actual returns, in percent.
    pub rmse_pct: f64,
    pub bic: f64,
    pub r2_mean: f64,
    pub kappa: usize,
    pub n_o: usize,
    pub p: usize,
    /// Whether the held-out panel was centered with its own means.
    pub out_sample_centered: bool,
}

/// Column order of [`write_reports_csv`].
pub const REPORT_COLUMNS: [&str; 8] = ["model", "rmse", "rmse_pct", "bic", "r2_mean", "kappa", "p", "n_O"];

fn check_shapes(predicted: &ReturnsPanel, actual: &ReturnsPanel) -> Result<()> {
    if predicted.n_assets() != actual.n_assets() {
        return Err(Error::DimensionMismatch {
            context: "number of assets",
            expected: actual.n_assets(),
            actual: predicted.n_assets(),
        });
    }
    if predicted.n_obs() != actual.n_obs() {
        return Err(Error::DimensionMismatch {
            context: "number of observations",
            expected: actual.n_obs(),
            actual: predicted.n_obs(),
        });
    }
    Ok(())
}

/// `RMSE = √(‖Ŷ − Y‖²_F / (p n))` and `100 · ‖Ŷ − Y‖_F / ‖Y‖_F`.
pub fn rmse(predicted: &ReturnsPanel, actual: &ReturnsPanel) -> Result<(f64, f64)> {
    check_shapes(predicted, actual)?;
    let err = (predicted.values() - actual.values()).norm_squared();
    let cells = actual.values().len() as f64;
    let value = (err / cells).sqrt();
    let scale = actual.values().norm_squared();
    let pct = if scale > 0.0 {
        100.0 * (err / scale).sqrt()
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok((value, pct))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Exogenous,
    Pca,
    SpatialMixed,
    GrmMixed,
    Grm,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exogenous" | "fama_french" => Ok(ModelKind::Exogenous),
            "pca" => Ok(ModelKind::Pca),
            "spatial" | "spatial_mixed" => Ok(ModelKind::SpatialMixed),
            "mixed" | "grm_mixed" => Ok(ModelKind::GrmMixed),
            "grm" => Ok(ModelKind::Grm),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Inputs needed to count free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub kind: ModelKind,
    pub p: usize,
    /// Number of factors (ignored for the pure GRM).
    pub k: usize,
    /// Number of zero cells of Ω̂ over the whole matrix (GRM kinds only).
    pub zeros: usize,
}

/// Free-parameter count κ:
/// `pk` for exogenous and PCA models, `1 + pk` for the spatial mixed model,
/// `1 + pk + ½p(p+1) − ½g` for the GRM mixed model and `½p(p+1) − ½g` for
/// the GRM, where g counts the zero cells of Ω̂.
pub fn count_parameters(desc: &ModelDescriptor) -> Result<usize> {
    let ModelDescriptor { kind, p, k, zeros } = *desc;
    let grm_part = || -> Result<usize> {
        let full = p * (p + 1);
        if zeros > full {
            return Err(Error::InvalidParameter(format!("{zeros} zeros exceed the {full} budget for p = {p}")));
        }
        Ok((full - zeros) / 2)
    };
    Ok(match kind {
        ModelKind::Exogenous | ModelKind::Pca => p * k,
        ModelKind::SpatialMixed => 1 + p * k,
        ModelKind::GrmMixed => 1 + p * k + grm_part()?,
        ModelKind::Grm => grm_part()?,
    })
}

/// Parses a kind name and counts its parameters.
pub fn count_parameters_for(kind: &str, p: usize, k: usize, zeros: usize) -> Result<usize> {
    let kind = kind.parse()?;
    count_parameters(&ModelDescriptor { kind, p, k, zeros })
}

/// `BIC = n_O Σ_i log RSS_i + κ log n_O` with `RSS_i = (1/n_O) Σ_j (Y − Ŷ)²_ij`.
pub fn bic(predicted: &ReturnsPanel, actual: &ReturnsPanel, kappa: usize) -> Result<f64> {
    check_shapes(predicted, actual)?;
    let n = actual.n_obs() as f64;
    let resid = predicted.values() - actual.values();
    let mut total = 0.0;
    for i in 0..resid.nrows() {
        let rss = resid.row(i).norm_squared() / n;
        if !(rss > 0.0) {
            return Err(Error::ZeroResidual { asset: i });
        }
        total += rss.ln();
    }
    Ok(n * total + kappa as f64 * n.ln())
}

/// Per-asset `R² = 1 − SSE_i / SST_i`, averaged over assets.
pub fn r2_mean(predicted: &ReturnsPanel, actual: &ReturnsPanel) -> Result<f64> {
    check_shapes(predicted, actual)?;
    let y = actual.values();
    let yhat = predicted.values();
    let p = y.nrows();
    let mut total = 0.0;
    for i in 0..p {
        let row = y.row(i);
        let mean = row.mean();
        let sst: f64 = row.iter().map(|v| (v - mean).powi(2)).sum();
        if !(sst > 0.0) {
            return Err(Error::ConstantRow { asset: i });
        }
        let sse = (row - yhat.row(i)).norm_squared();
        total += 1.0 - sse / sst;
    }
    Ok(total / p as f64)
}

/// Computes every metric for one model.
pub fn evaluate(label: &str, predicted: &ReturnsPanel, actual: &ReturnsPanel, kappa: usize) -> Result<EvalReport> {
    let (rmse, rmse_pct) = rmse(predicted, actual)?;
    Ok(EvalReport {
        model_label: label.to_string(),
        rmse,
        rmse_pct,
        bic: bic(predicted, actual, kappa)?,
        r2_mean: r2_mean(predicted, actual)?,
        kappa,
        n_o: actual.n_obs(),
        p: actual.n_assets(),
        out_sample_centered: actual.is_centered(),
    })
}

/// Writes reports as CSV with the columns of [`REPORT_COLUMNS`], sorted by
/// model label.
pub fn write_reports_csv<W: std::io::Write>(reports: &[EvalReport], out: W) -> Result<()> {
    let mut sorted: Vec<&EvalReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.model_label.cmp(&b.model_label));
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Panel(e.into());
    w.write_record(REPORT_COLUMNS).map_err(csv_err)?;
    for r in sorted {
        w.write_record([
            r.model_label.clone(),
            r.rmse.to_string(),
            r.rmse_pct.to_string(),
            r.bic.to_string(),
            r.r2_mean.to_string(),
            r.kappa.to_string(),
            r.p.to_string(),
            r.n_o.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<report>".into(),
        source: e,
    })?;
    Ok(())
}

/// Anything that maps a held-out panel to predictions.
pub trait Predictor: Send + Sync {
    fn predict(&self, panel: &ReturnsPanel) -> Result<ReturnsPanel>;
}

impl<F> Predictor for F
where
    F: Fn(&ReturnsPanel) -> Result<ReturnsPanel> + Send + Sync,
{
    fn predict(&self, panel: &ReturnsPanel) -> Result<ReturnsPanel> {
        self(panel)
    }
}

/// One evaluation window of a rolling backtest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestPeriod {
    pub period: usize,
    pub fit_start: usize,
    pub eval_start: usize,
    pub eval_end: usize,
    pub r2_mean: f64,
}

/// Fits on `[t, t + window)`, scores mean R² on `[t + window, t + window +
/// step)`, and advances t by `step`, giving `⌊(n − window)/step⌋` periods.
/// Both blocks are centered with their own means. Periods are fitted in
/// parallel and returned in chronological order.
pub fn rolling_backtest<R>(panel: &ReturnsPanel, recipe: R, window: usize, step: usize) -> Result<Vec<BacktestPeriod>>
where
    R: Fn(&ReturnsPanel) -> Result<Box<dyn Predictor>> + Sync,
{
    let n = panel.n_obs();
    if window < 2 || step < 2 || window + step > n {
        return Err(Error::InsufficientHistory { n, window, step });
    }
    let periods = (n - window) / step;
    (0..periods)
        .into_par_iter()
        .map(|k| {
            let t = k * step;
            let train = crate::panel::center(&panel.columns(t, t + window)?);
            let test = crate::panel::center(&panel.columns(t + window, t + window + step)?);
            let predictor = recipe(&train)?;
            let yhat = predictor.predict(&test)?;
            Ok(BacktestPeriod {
                period: k,
                fit_start: t,
                eval_start: t + window,
                eval_end: t + window + step,
                r2_mean: r2_mean(&yhat, &test)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn panel(rows: usize, cols: usize, data: &[f64]) -> ReturnsPanel {
        ReturnsPanel::from_matrix(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    #[test]
    fn rmse_examples() {
        let y = panel(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let zero = panel(2, 2, &[0.0; 4]);
        assert_eq!(rmse(&y, &y).unwrap(), (0.0, 0.0));
        assert_eq!(rmse(&zero, &y).unwrap(), (1.0, 100.0));
        let wide = panel(2, 3, &[0.0; 6]);
        assert!(matches!(rmse(&wide, &y), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn parameter_counts() {
        let d = |kind, p, k, zeros| count_parameters(&ModelDescriptor { kind, p, k, zeros }).unwrap();
        assert_eq!(d(ModelKind::Exogenous, 10, 3, 0), 30);
        assert_eq!(d(ModelKind::Pca, 10, 3, 0), 30);
        assert_eq!(d(ModelKind::SpatialMixed, 10, 3, 0), 31);
        assert_eq!(d(ModelKind::Grm, 4, 0, 0), 10);
        assert_eq!(d(ModelKind::Grm, 4, 0, 12), 4);
        assert_eq!(d(ModelKind::GrmMixed, 4, 3, 12), 17);
        assert!(matches!(count_parameters_for("lstm", 4, 1, 0), Err(Error::UnknownKind(_))));
    }

    #[test]
    fn bic_examples() {
        let actual = panel(1, 2, &[1.0, -1.0]);
        let zero = panel(1, 2, &[0.0, 0.0]);
        assert_eq!(bic(&zero, &actual, 0).unwrap(), 0.0);
        assert!(matches!(bic(&actual, &actual, 0), Err(Error::ZeroResidual { asset: 0 })));
        let step = bic(&zero, &actual, 4).unwrap() - bic(&zero, &actual, 3).unwrap();
        assert!((step - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn r2_examples() {
        let actual = panel(2, 3, &[0.1, 0.4, -0.2, 1.0, 2.0, 4.0]);
        assert_eq!(r2_mean(&actual, &actual).unwrap(), 1.0);
        let means = panel(2, 3, &[0.1, 0.1, 0.1, 7.0 / 3.0, 7.0 / 3.0, 7.0 / 3.0]);
        assert!(r2_mean(&means, &actual).unwrap().abs() < 1e-14);
        assert_eq!(r2_mean(&panel(1, 2, &[1.0, 1.0]), &panel(1, 2, &[0.0, 2.0])).unwrap(), 0.0);
        assert!(matches!(r2_mean(&actual, &panel(2, 3, &[1.0; 6])), Err(Error::ConstantRow { asset: 0 })));
    }

    #[test]
    fn csv_is_sorted_by_label() {
        let r = |label: &str| EvalReport {
            model_label: label.into(),
            rmse: 0.5,
            rmse_pct: 50.0,
            bic: -1.0,
            r2_mean: 0.2,
            kappa: 3,
            n_o: 10,
            p: 2,
            out_sample_centered: true,
        };
        let mut buf = Vec::new();
        write_reports_csv(&[r("pca"), r("grm")], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "model,rmse,rmse_pct,bic,r2_mean,kappa,p,n_O");
        assert!(lines[1].starts_with("grm,") && lines[2].starts_with("pca,"));
    }

    #[test]
    fn backtest_counts_periods() {
        let data: Vec<f64> = (0..3 * 40).map(|v| ((v * 37 % 11) as f64 - 5.0) / 10.0).collect();
        let p = panel(3, 40, &data);
        let zero = |_: &ReturnsPanel| -> Result<Box<dyn Predictor>> {
            Ok(Box::new(|y: &ReturnsPanel| Ok(ReturnsPanel::from_matrix(DMatrix::zeros(y.n_assets(), y.n_obs()))?)))
        };
        assert_eq!(rolling_backtest(&p, zero, 20, 20).unwrap().len(), 1);
        let out = rolling_backtest(&p, zero, 10, 7).unwrap();
        assert_eq!(out.len(), 4);
        assert!(out.windows(2).all(|w| w[0].period < w[1].period));
        assert!(out.iter().all(|b| b.r2_mean <= 0.0));
        assert!(matches!(rolling_backtest(&p, zero, 35, 10), Err(Error::InsufficientHistory { .. })));
    }

    proptest! {
        #[test]
        fn rmse_permutation_and_bic_monotone(
            data in proptest::collection::vec(-1.0f64..1.0, 12),
            noise in proptest::collection::vec(0.01f64..1.0, 12),
            shift in 0usize..4,
        ) {
            let actual = DMatrix::from_row_slice(3, 4, &data);
            let pred = DMatrix::from_fn(3, 4, |i, j| actual[(i, j)] + noise[i * 4 + j]);
            let perm: Vec<usize> = (0..4).map(|c| (c + shift) % 4).collect();
            let pa = DMatrix::from_fn(3, 4, |i, j| actual[(i, perm[j])]);
            let pp = DMatrix::from_fn(3, 4, |i, j| pred[(i, perm[j])]);
            let a = rmse(&ReturnsPanel::from_matrix(pred.clone()).unwrap(), &ReturnsPanel::from_matrix(actual.clone()).unwrap()).unwrap();
            let b = rmse(&ReturnsPanel::from_matrix(pp).unwrap(), &ReturnsPanel::from_matrix(pa).unwrap()).unwrap();
            prop_assert!((a.0 - b.0).abs() <= 1e-14);
            let yp = ReturnsPanel::from_matrix(pred).unwrap();
            let ya = ReturnsPanel::from_matrix(actual).unwrap();
            prop_assert!(bic(&yp, &ya, 5).unwrap() > bic(&yp, &ya, 4).unwrap());
        }
    }
}
