use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} lies outside the sampled window [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("window too short for Stepanov norm: length {len} < 1")]
    WindowTooShort { len: f64 },

    #[error("no admissible shift: window [{lo}, {hi}] cannot accommodate tau = {tau}")]
    NoAdmissibleShift { tau: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error("contraction violated: {0}")]
    ContractionViolated(String),

    #[error("iterate left the invariant ball at t = {t}: norm {norm} > rho {rho}")]
    LeftBall { t: f64, norm: f64, rho: f64 },

    #[error("no convergence after {iterations} iterations: residual {residual}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfRange { .. } => "out_of_range",
            Error::WindowTooShort { .. } => "window_too_short",
            Error::NoAdmissibleShift { .. } => "no_admissible_shift",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Config { .. } => "invalid_config",
            Error::ContractionViolated(_) => "contraction_violated",
            Error::LeftBall { .. } => "left_ball",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Process exit code associated with this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidArgument(_) => 4,
            Error::ContractionViolated(_) | Error::LeftBall { .. } => 2,
            Error::NonConvergence { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
