//! Crate-wide error type.

use thiserror::Error;

use crate::panel::PanelError;
use crate::precision::PrecisionEstimate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Panel(#[from] PanelError),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("asset identifiers do not match between {0}")]
    AssetMismatch(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    // Covariance
    #[error("need at least 2 observations for a sample covariance, got {n}")]
    DegenerateSample { n: usize },

    // Sparse precision
    #[error("{method} did not converge after {iterations} sweeps at lambda {lambda} (residual {residual:.3e})")]
    NotConverged {
        method: &'static str,
        lambda: f64,
        iterations: usize,
        residual: f64,
        partial: Box<PrecisionEstimate>,
    },
    #[error("covariance matrix is singular; an unpenalized fit needs a positive definite input")]
    SingularInput,
    #[error("objective became non-finite at sweep {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("at lambda {lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    // GRM
    #[error("precision diagonal entry {index} is {value}, must be strictly positive")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("conditioning subset is empty")]
    EmptySubset,
    #[error("conditioning subset covers every asset")]
    FullSubset,
    #[error("conditioning block is numerically singular")]
    SingularBlock,
    #[error("stored model is inconsistent: {0}")]
    InconsistentModel(String),

    // Factor models
    #[error("factor Gram matrix X Xᵀ is numerically singular")]
    SingularFactorGram,
    #[error("factor and return panels are misaligned: {0}")]
    Misalignment(String),
    #[error("eigenvalues {index} and {next} are tied (gap {gap:.3e})", next = index + 1)]
    TiedEigenvalues { index: usize, gap: f64 },
    #[error("precision matrix is not invertible: {0}")]
    SingularOmega(String),
    #[error("eigenvector {index} has zero mean and cannot be normalized to mean one")]
    ZeroMeanEigenvector { index: usize },
    #[error("exogenous factor model needs out-of-sample factor returns")]
    MissingFactors,

    // Interaction models
    #[error("distance between {i} and {j} is zero")]
    ZeroDistance { i: usize, j: usize },
    #[error("no feasible interaction coefficient in the search range")]
    NoFeasiblePoint,

    // Evaluation
    #[error("unknown model kind '{0}'")]
    UnknownKind(String),
    #[error("residual sum of squares is zero for asset {asset}")]
    ZeroResidual { asset: usize },
    #[error("actual returns of asset {asset} are constant")]
    ConstantRow { asset: usize },
    #[error("history of {n} observations is too short for window {window} and step {step}")]
    InsufficientHistory { n: usize, window: usize, step: usize },

    // Beta analytics
    #[error("vector is zero")]
    ZeroVector,
    #[error("vector has zero mean")]
    ZeroMean,
    #[error("beta vector is zero")]
    ZeroBeta,

    // Graphs
    #[error("target of {target} edges exceeds the {max} available pairs")]
    UnreachableTarget { target: usize, max: usize },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("vertex '{0}' has no group")]
    UncoveredVertex(String),

    // Synthetic markets
    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("normal equations for row {row} are singular")]
    SingularSubmatrix { row: usize },
    #[error("market portfolio has zero variance")]
    DegenerateMarket,

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
