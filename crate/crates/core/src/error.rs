use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("ICC calibration failed: {0}")]
    Calibration(String),

    #[error("inference error: {0}")]
    Inference(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("coefficient `{0}` was dropped as collinear")]
    DroppedCoefficient(String),

    #[error("unknown coefficient `{0}`")]
    UnknownCoefficient(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown {registry} strategy `{name}` (known: {known})")]
    UnknownStrategy {
        registry: &'static str,
        name: String,
        known: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag, used by the CLI error envelope.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config { .. } => "config",
            Error::Infeasible(_) => "infeasible",
            Error::Calibration(_) => "calibration",
            Error::Inference(_) => "inference",
            Error::Degenerate(_) => "degenerate",
            Error::DroppedCoefficient(_) => "dropped_coefficient",
            Error::UnknownCoefficient(_) => "unknown_coefficient",
            Error::Singular(_) => "singular",
            Error::Precondition(_) => "precondition",
            Error::UnknownStrategy { .. } => "unknown_strategy",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
