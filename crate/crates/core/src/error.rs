use thiserror::Error;

/// Errors produced by the library.
///
/// Each variant maps to a stable machine-readable code (see [`Error::code`]) that the
/// CLI prints as a prefix, and to a category that decides the process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),
    #[error("invalid feature spec: {0}")]
    InvalidSpec(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("singular covariance: {0} (consider adding jitter)")]
    SingularCovariance(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("contamination must lie in (0, 1), got {0}")]
    InvalidContamination(f64),
    #[error("ensemble received no decisions")]
    EmptyEnsemble,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("wrong algorithm: {0}")]
    WrongAlgorithm(String),
    #[error("rankings are not comparable: {0}")]
    IncomparableRankings(String),
    #[error("no specific features remain after dropping general features")]
    NoSpecificFeatures,
    #[error("invalid diagnosis mode: {0}")]
    InvalidMode(String),
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("no inputs: {0}")]
    NoInputs(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSignal(_) => "E_INVALID_SIGNAL",
            Error::InvalidBand(_) => "E_INVALID_BAND",
            Error::DegenerateSignal(_) => "E_DEGENERATE_SIGNAL",
            Error::InvalidSpec(_) => "E_INVALID_SPEC",
            Error::InsufficientData(_) => "E_INSUFFICIENT_DATA",
            Error::SingularCovariance(_) => "E_SINGULAR_COVARIANCE",
            Error::DegenerateGeometry(_) => "E_DEGENERATE_GEOMETRY",
            Error::InvalidContamination(_) => "E_INVALID_CONTAMINATION",
            Error::EmptyEnsemble => "E_EMPTY_ENSEMBLE",
            Error::InvalidConfig(_) => "E_INVALID_CONFIG",
            Error::WrongAlgorithm(_) => "E_WRONG_ALGORITHM",
            Error::IncomparableRankings(_) => "E_INCOMPARABLE_RANKINGS",
            Error::NoSpecificFeatures => "E_NO_SPECIFIC_FEATURES",
            Error::InvalidMode(_) => "E_INVALID_MODE",
            Error::FeatureMismatch(_) => "E_FEATURE_MISMATCH",
            Error::Format(_) => "E_FORMAT",
            Error::NoInputs(_) => "E_NO_INPUTS",
            Error::Io(_) => "E_IO",
            Error::Csv(_) => "E_CSV",
            Error::Json(_) => "E_JSON",
        }
    }

    /// True for errors caused by bad user-supplied configuration or inputs that fail
    /// validation, as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidBand(_)
                | Error::InvalidSpec(_)
                | Error::InvalidContamination(_)
                | Error::InvalidConfig(_)
                | Error::WrongAlgorithm(_)
                | Error::InvalidMode(_)
                | Error::FeatureMismatch(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
