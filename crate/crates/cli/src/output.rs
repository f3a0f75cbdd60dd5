//! Output files. Every JSON document carries the resolved configuration
//! under `config` and the only run-dependent data, the creation time,
//! under `metadata`, so reruns differ in `metadata` alone.

use std::path::{Path, PathBuf};

use grmkit::factor::FactorModel;
use grmkit::interaction::MixedModel;
use grmkit::precision::{CvResult, PrecisionEstimate};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub generated_at: String,
    pub version: String,
}

impl Metadata {
    pub fn now() -> Self {
        Self {
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Fitted model of any kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "estimate", rename_all = "snake_case")]
pub enum ModelPayload {
    Precision(PrecisionEstimate),
    Factor(FactorModel),
    Mixed(MixedModel),
}

/// Contents of `model.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    /// Method name, used as the model label in reports.
    pub label: String,
    pub model: ModelPayload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvResult>,
    pub config: serde_json::Value,
    pub metadata: Metadata,
}

/// Generic result document of the analysis commands.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub result: T,
    pub config: serde_json::Value,
    pub metadata: Metadata,
}

/// Path of a required input: usage error when absent, missing-input error
/// when it does not exist.
pub fn require_input<'a>(path: Option<&'a PathBuf>, flag: &str) -> CliResult<&'a Path> {
    let path = path.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))?;
    check_exists(path)?;
    Ok(path)
}

/// Optional input that must exist when given.
pub fn optional_input(path: Option<&PathBuf>) -> CliResult<Option<&Path>> {
    match path {
        Some(p) => check_exists(p).map(|_| Some(p.as_path())),
        None => Ok(None),
    }
}

pub fn check_exists(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

/// Output directory, created if needed; defaults to the working directory.
pub fn out_dir(path: Option<&PathBuf>) -> CliResult<PathBuf> {
    let dir = path.cloned().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_model(path: &Path) -> CliResult<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::BadFile {
        path: path.to_path_buf(),
        message: format!("not a model file: {e}"),
    })
}

/// CSV writer over a file, with I/O errors tagged by path.
pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::BadFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}
