//! Return panels and the auxiliary tables that travel with them.
//!
//! A [`ReturnsPanel`] stores assets in rows and observations in columns, the
//! `p × n` layout every estimator in this crate expects. Ingestion is strict:
//! blank or non-numeric cells, duplicated symbols and out-of-order dates are
//! hard errors rather than something to impute or reorder.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("I/O error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing or non-numeric value at data row {row}, column '{column}'")]
    MissingValue { row: usize, column: String },
    #[error("duplicate symbol '{0}'")]
    DuplicateSymbol(String),
    #[error("dates are not strictly increasing at data row {row} ({date})")]
    NonMonotoneDates { row: usize, date: NaiveDate },
    #[error("cannot parse date '{value}' at data row {row}")]
    BadDate { row: usize, value: String },
    #[error("panel too small: need at least {min_assets} assets and {min_obs} observations, got {assets} × {obs}")]
    TooSmall {
        min_assets: usize,
        min_obs: usize,
        assets: usize,
        obs: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("split leaves {in_sample} in-sample and {out_sample} out-of-sample observations; both sides need at least 2")]
    EmptySplit { in_sample: usize, out_sample: usize },
    #[error("invalid distance matrix: {0}")]
    InvalidDistance(String),
    #[error("symbol '{0}' has no entry")]
    UnknownSymbol(String),
    #[error("factor and return panels are not aligned: {0}")]
    Misalignment(String),
}

fn io_err(path: &Path, source: std::io::Error) -> PanelError {
    PanelError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Supported on-disk layouts for return panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelFormat {
    /// `date,SYM1,SYM2,...` with one row per observation.
    WideCsv,
}

/// `p × n` matrix of per-period simple returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsPanel {
    asset_ids: Vec<String>,
    timestamps: Vec<NaiveDate>,
    #[serde(with = "linalg::rows")]
    values: DMatrix<f64>,
    centered: bool,
    #[serde(default)]
    predicted: bool,
}

impl ReturnsPanel {
    /// Builds a panel after checking that symbols are unique, dates strictly
    /// increase, every value is finite and the shapes agree.
    pub fn new(
        asset_ids: Vec<String>,
        timestamps: Vec<NaiveDate>,
        values: DMatrix<f64>,
    ) -> Result<Self, PanelError> {
        if values.nrows() != asset_ids.len() || values.ncols() != timestamps.len() {
            return Err(PanelError::Shape(format!(
                "{} ids and {} dates for a {}×{} matrix",
                asset_ids.len(),
                timestamps.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        if asset_ids.is_empty() || timestamps.is_empty() {
            return Err(PanelError::TooSmall {
                min_assets: 1,
                min_obs: 1,
                assets: asset_ids.len(),
                obs: timestamps.len(),
            });
        }
        check_unique(&asset_ids)?;
        check_increasing(&timestamps)?;
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(PanelError::MissingValue {
                        row: j + 1,
                        column: asset_ids[i].clone(),
                    });
                }
            }
        }
        Ok(Self {
            asset_ids,
            timestamps,
            values,
            centered: false,
            predicted: false,
        })
    }

    /// Panel with synthetic consecutive daily timestamps starting 2000-01-03.
    pub fn with_default_dates(asset_ids: Vec<String>, values: DMatrix<f64>) -> Result<Self, PanelError> {
        let dates = default_dates(values.ncols());
        Self::new(asset_ids, dates, values)
    }

    /// Generic ids `A1..Ap` and default dates; handy for tests and synthetic work.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self, PanelError> {
        let ids = default_ids(values.nrows());
        Self::with_default_dates(ids, values)
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_assets(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_obs(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// True for panels produced by a model's `predict` rather than observed.
    pub fn is_prediction(&self) -> bool {
        self.predicted
    }

    /// Same ids and dates, new values; used by predictors.
    pub(crate) fn with_prediction(&self, values: DMatrix<f64>) -> Self {
        debug_assert_eq!(values.shape(), self.values.shape());
        Self {
            asset_ids: self.asset_ids.clone(),
            timestamps: self.timestamps.clone(),
            values,
            centered: false,
            predicted: true,
        }
    }

    /// Observations `start..end` as a new panel. Centering is not carried over.
    pub fn columns(&self, start: usize, end: usize) -> Result<Self, PanelError> {
        if start >= end || end > self.n_obs() {
            return Err(PanelError::Shape(format!(
                "column range {start}..{end} outside 0..{}",
                self.n_obs()
            )));
        }
        Self::new(
            self.asset_ids.clone(),
            self.timestamps[start..end].to_vec(),
            self.values.columns(start, end - start).into_owned(),
        )
    }

    /// Keeps the columns whose index is not in `start..end`.
    pub fn without_columns(&self, start: usize, end: usize) -> Result<Self, PanelError> {
        let keep: Vec<usize> = (0..self.n_obs()).filter(|&c| c < start || c >= end).collect();
        if keep.is_empty() {
            return Err(PanelError::Shape("no columns left".into()));
        }
        let values = DMatrix::from_fn(self.n_assets(), keep.len(), |i, c| self.values[(i, keep[c])]);
        Self::new(
            self.asset_ids.clone(),
            keep.iter().map(|&c| self.timestamps[c]).collect(),
            values,
        )
    }

    /// Checks that two panels cover the same assets in the same order.
    pub fn same_assets(&self, other: &ReturnsPanel) -> bool {
        self.asset_ids == other.asset_ids
    }
}

pub(crate) fn default_ids(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("A{i}")).collect()
}

pub(crate) fn default_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    start.iter_days().take(n).collect()
}

fn check_unique(ids: &[String]) -> Result<(), PanelError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(PanelError::DuplicateSymbol(id.clone()));
        }
    }
    Ok(())
}

fn check_increasing(dates: &[NaiveDate]) -> Result<(), PanelError> {
    for (row, pair) in dates.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(PanelError::NonMonotoneDates {
                row: row + 2,
                date: pair[1],
            });
        }
    }
    Ok(())
}

fn parse_date(raw: &str, row: usize) -> Result<NaiveDate, PanelError> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d").map_err(|_| PanelError::BadDate {
        row,
        value: raw.to_string(),
    })
}

fn parse_cell(raw: Option<&str>, row: usize, column: &str) -> Result<f64, PanelError> {
    let cell = raw.map(str::trim).unwrap_or("");
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(PanelError::MissingValue {
            row,
            column: column.to_string(),
        }),
    }
}

/// Column names, dates and the `names × dates` values of a wide table.
type WideTable = (Vec<String>, Vec<NaiveDate>, DMatrix<f64>);

/// Reads a dated wide table: header `date,NAME1,...`, one row per date.
fn read_wide(path: &Path) -> Result<WideTable, PanelError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader.headers()?.clone();
    let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    check_unique(&names)?;
    let mut dates = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = idx + 1;
        dates.push(parse_date(record.get(0).unwrap_or(""), row)?);
        let mut values = Vec::with_capacity(names.len());
        for (c, name) in names.iter().enumerate() {
            values.push(parse_cell(record.get(c + 1), row, name)?);
        }
        rows.push(values);
    }
    check_increasing(&dates)?;
    let values = DMatrix::from_fn(names.len(), dates.len(), |i, j| rows[j][i]);
    Ok((names, dates, values))
}

/// Loads a returns panel. The panel is returned uncentered.
pub fn load_returns(path: impl AsRef<Path>, format: PanelFormat) -> Result<ReturnsPanel, PanelError> {
    let path = path.as_ref();
    match format {
        PanelFormat::WideCsv => {
            let (ids, dates, values) = read_wide(path)?;
            if ids.len() < 2 || dates.len() < 2 {
                return Err(PanelError::TooSmall {
                    min_assets: 2,
                    min_obs: 2,
                    assets: ids.len(),
                    obs: dates.len(),
                });
            }
            ReturnsPanel::new(ids, dates, values)
        }
    }
}

/// Writes a panel in wide CSV form (`date,SYM1,...`).
pub fn write_returns(panel: &ReturnsPanel, path: impl AsRef<Path>) -> Result<(), PanelError> {
    write_wide(path.as_ref(), panel.asset_ids(), panel.timestamps(), panel.values())
}

fn write_wide(path: &Path, names: &[String], dates: &[NaiveDate], values: &DMatrix<f64>) -> Result<(), PanelError> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(names.iter().cloned());
    writer.write_record(&header)?;
    for (j, date) in dates.iter().enumerate() {
        let mut record = vec![date.format("%Y-%m-%d").to_string()];
        record.extend((0..values.nrows()).map(|i| values[(i, j)].to_string()));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

fn row_means(values: &DMatrix<f64>) -> Vec<f64> {
    let n = values.ncols() as f64;
    (0..values.nrows()).map(|i| values.row(i).sum() / n).collect()
}

fn demean_rows(values: &mut DMatrix<f64>) {
    let means = row_means(values);
    for (i, mean) in means.into_iter().enumerate() {
        values.row_mut(i).add_scalar_mut(-mean);
    }
}

/// Subtracts each asset's sample mean. Idempotent: a panel already flagged
/// as centered comes back unchanged.
pub fn center(panel: &ReturnsPanel) -> ReturnsPanel {
    if panel.centered {
        return panel.clone();
    }
    let mut out = panel.clone();
    demean_rows(&mut out.values);
    out.centered = true;
    out
}

/// Splits by date: observations dated on or before `boundary` go in-sample.
pub fn split(panel: &ReturnsPanel, boundary: NaiveDate) -> Result<(ReturnsPanel, ReturnsPanel), PanelError> {
    let cut = panel.timestamps.partition_point(|d| *d <= boundary);
    split_at(panel, cut)
}

/// Splits after the first `n_in` observations.
pub fn split_at(panel: &ReturnsPanel, n_in: usize) -> Result<(ReturnsPanel, ReturnsPanel), PanelError> {
    let n = panel.n_obs();
    let n_in = n_in.min(n);
    if n_in < 2 || n - n_in < 2 {
        return Err(PanelError::EmptySplit {
            in_sample: n_in,
            out_sample: n - n_in,
        });
    }
    Ok((panel.columns(0, n_in)?, panel.columns(n_in, n)?))
}

/// Symbol → sector label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorMap {
    entries: BTreeMap<String, String>,
}

impl SectorMap {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        Self { entries }
    }

    pub fn get(&self, symbol: &str) -> Option<&str> {
        self.entries.get(symbol).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted distinct labels.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.entries.values().cloned().collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Sector of each symbol, in order; errors on any unmapped symbol.
    pub fn labels_for(&self, symbols: &[String]) -> Result<Vec<String>, PanelError> {
        symbols
            .iter()
            .map(|s| {
                self.get(s)
                    .map(str::to_string)
                    .ok_or_else(|| PanelError::UnknownSymbol(s.clone()))
            })
            .collect()
    }
}

/// Loads `symbol,sector` rows.
pub fn load_sectors(path: impl AsRef<Path>) -> Result<SectorMap, PanelError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut entries = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let symbol = record.get(0).unwrap_or("").trim().to_string();
        let sector = record.get(1).unwrap_or("").trim().to_string();
        if symbol.is_empty() || sector.is_empty() {
            return Err(PanelError::MissingValue {
                row: idx + 1,
                column: if symbol.is_empty() { "symbol" } else { "sector" }.to_string(),
            });
        }
        if entries.insert(symbol.clone(), sector).is_some() {
            return Err(PanelError::DuplicateSymbol(symbol));
        }
    }
    Ok(SectorMap { entries })
}

/// Pairwise asset distances in miles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    asset_ids: Vec<String>,
    #[serde(with = "linalg::rows")]
    d: DMatrix<f64>,
}

impl DistanceMatrix {
    /// Checks symmetry, non-negativity and a zero diagonal. Strict positivity
    /// off the diagonal is left to the consumers that divide by distances.
    pub fn new(asset_ids: Vec<String>, d: DMatrix<f64>) -> Result<Self, PanelError> {
        let p = asset_ids.len();
        if d.nrows() != p || d.ncols() != p {
            return Err(PanelError::InvalidDistance(format!(
                "{p} ids for a {}×{} matrix",
                d.nrows(),
                d.ncols()
            )));
        }
        check_unique(&asset_ids)?;
        for i in 0..p {
            if d[(i, i)] != 0.0 {
                return Err(PanelError::InvalidDistance(format!("d[{i},{i}] = {} is not zero", d[(i, i)])));
            }
            for j in 0..p {
                let v = d[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(PanelError::InvalidDistance(format!("d[{i},{j}] = {v}")));
                }
                let tol = 1e-9 * v.abs().max(d[(j, i)].abs()).max(1.0);
                if (v - d[(j, i)]).abs() > tol {
                    return Err(PanelError::InvalidDistance(format!("d[{i},{j}] != d[{j},{i}]")));
                }
            }
        }
        Ok(Self { asset_ids, d })
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// Reorders to match `symbols`, failing if any symbol is missing.
    pub fn reorder(&self, symbols: &[String]) -> Result<Self, PanelError> {
        let idx: Vec<usize> = symbols
            .iter()
            .map(|s| {
                self.asset_ids
                    .iter()
                    .position(|a| a == s)
                    .ok_or_else(|| PanelError::UnknownSymbol(s.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            asset_ids: symbols.to_vec(),
            d: linalg::submatrix(&self.d, &idx, &idx),
        })
    }
}

/// Loads a square distance table: header `symbol,SYM1,...`, then one row
/// per symbol in the same order.
pub fn load_distances(path: impl AsRef<Path>) -> Result<DistanceMatrix, PanelError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers()?.clone();
    let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let symbol = record.get(0).unwrap_or("").trim();
        if names.get(idx).map(String::as_str) != Some(symbol) {
            return Err(PanelError::InvalidDistance(format!(
                "row {} symbol '{symbol}' does not match header order",
                idx + 1
            )));
        }
        let mut values = Vec::with_capacity(names.len());
        for (c, name) in names.iter().enumerate() {
            values.push(parse_cell(record.get(c + 1), idx + 1, name)?);
        }
        rows.push(values);
    }
    if rows.len() != names.len() {
        return Err(PanelError::InvalidDistance(format!(
            "{} rows for {} columns",
            rows.len(),
            names.len()
        )));
    }
    let p = names.len();
    DistanceMatrix::new(names, DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

/// `k × n` matrix of factor returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPanel {
    factor_names: Vec<String>,
    timestamps: Vec<NaiveDate>,
    #[serde(with = "linalg::rows")]
    values: DMatrix<f64>,
    centered: bool,
}

impl FactorPanel {
    pub fn new(
        factor_names: Vec<String>,
        timestamps: Vec<NaiveDate>,
        values: DMatrix<f64>,
    ) -> Result<Self, PanelError> {
        if factor_names.is_empty() {
            return Err(PanelError::Shape("at least one factor is required".into()));
        }
        if values.nrows() != factor_names.len() || values.ncols() != timestamps.len() {
            return Err(PanelError::Shape(format!(
                "{} factors and {} dates for a {}×{} matrix",
                factor_names.len(),
                timestamps.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        check_unique(&factor_names)?;
        check_increasing(&timestamps)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PanelError::Shape("non-finite factor value".into()));
        }
        Ok(Self {
            factor_names,
            timestamps,
            values,
            centered: false,
        })
    }

    /// Factor panel sharing the dates of `panel`.
    pub fn aligned_with(panel: &ReturnsPanel, factor_names: Vec<String>, values: DMatrix<f64>) -> Result<Self, PanelError> {
        Self::new(factor_names, panel.timestamps().to_vec(), values)
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_factors(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_obs(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Demeans each factor row; idempotent.
    pub fn centered(&self) -> Self {
        if self.centered {
            return self.clone();
        }
        let mut out = self.clone();
        demean_rows(&mut out.values);
        out.centered = true;
        out
    }

    /// Errors unless the factor dates are exactly the panel's dates.
    pub fn check_aligned(&self, panel: &ReturnsPanel) -> Result<(), PanelError> {
        if self.timestamps.as_slice() != panel.timestamps() {
            return Err(PanelError::Misalignment(format!(
                "{} factor dates vs {} return dates",
                self.n_obs(),
                panel.n_obs()
            )));
        }
        Ok(())
    }

    /// Restricts to the dates of `panel` (which must all be present).
    pub fn restrict_to(&self, panel: &ReturnsPanel) -> Result<Self, PanelError> {
        let idx: Vec<usize> = panel
            .timestamps()
            .iter()
            .map(|d| {
                self.timestamps
                    .binary_search(d)
                    .map_err(|_| PanelError::Misalignment(format!("no factor observation on {d}")))
            })
            .collect::<Result<_, _>>()?;
        let values = DMatrix::from_fn(self.n_factors(), idx.len(), |i, c| self.values[(i, idx[c])]);
        Self::new(self.factor_names.clone(), panel.timestamps().to_vec(), values)
    }
}

/// Loads `date,F1,F2,...`.
pub fn load_factors(path: impl AsRef<Path>) -> Result<FactorPanel, PanelError> {
    let (names, dates, values) = read_wide(path.as_ref())?;
    FactorPanel::new(names, dates, values)
}

/// Writes a factor panel in the same wide layout it is read from.
pub fn write_factors(panel: &FactorPanel, path: impl AsRef<Path>) -> Result<(), PanelError> {
    write_wide(path.as_ref(), panel.factor_names(), panel.timestamps(), panel.values())
}
