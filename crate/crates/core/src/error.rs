use thiserror::Error;

#[derive(Debug, Error)]
pub enum NextDoorError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "solver did not converge after {iterations} iterations (lambda = {lambda}, last change = {last_change:e})"
    )]
    NonConvergence {
        iterations: usize,
        lambda: f64,
        last_change: f64,
        /// Last iterate: standardized coefficients followed by the intercept.
        last_iterate: Vec<f64>,
    },
    #[error("cross-validation fold {fold}, lambda index {lambda_index}: {source}")]
    Fold {
        fold: usize,
        lambda_index: usize,
        #[source]
        source: Box<NextDoorError>,
    },
    #[error("covariance factorization failed: {0}")]
    Covariance(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("predictor {name}: {source}")]
    Predictor {
        name: String,
        #[source]
        source: Box<NextDoorError>,
    },
}

impl NextDoorError {
    pub fn data(msg: impl Into<String>) -> Self {
        NextDoorError::Data(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        NextDoorError::InvalidArgument(msg.into())
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            NextDoorError::NonConvergence { .. } | NextDoorError::Covariance(_) | NextDoorError::Singular(_) => true,
            NextDoorError::Fold { source, .. } | NextDoorError::Predictor { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = NextDoorError> = std::result::Result<T, E>;
