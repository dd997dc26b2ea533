use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("timestamps not monotone at line {line}: {message}")]
    Ordering { line: usize, message: String },

    #[error("tick at {timestamp} falls outside every trading session")]
    OutsideSession { timestamp: String },

    #[error("invalid calendar: {0}")]
    Calendar(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("expected a {expected} series, got {found}")]
    KindMismatch { expected: String, found: String },

    #[error("zero variance: correlation and fluctuation functions are undefined for a constant series")]
    ZeroVariance,

    #[error("intraday pattern slot {slot} is undefined")]
    UndefinedSlot { slot: usize },

    #[error("invalid window: {0}")]
    Window(String),

    #[error("power-law fit failed: {0}")]
    Fit(String),

    #[error("singularity spectrum unavailable: need at least {needed} q values, got {got}")]
    SpectrumUnavailable { needed: usize, got: usize },

    #[error("invalid generator spec: {0}")]
    Spec(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by front ends to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Unreadable input, malformed files, bad options.
    Input,
    /// The data is valid but numerically degenerate for the requested analysis.
    Numerical,
    /// An internal consistency check failed.
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Format { .. }
            | Error::Ordering { .. }
            | Error::OutsideSession { .. }
            | Error::Calendar(_)
            | Error::Config(_)
            | Error::Spec(_)
            | Error::KindMismatch { .. }
            | Error::Io(_)
            | Error::Csv(_) => ErrorClass::Input,
            Error::InsufficientData { .. }
            | Error::ZeroVariance
            | Error::UndefinedSlot { .. }
            | Error::Window(_)
            | Error::Fit(_)
            | Error::SpectrumUnavailable { .. } => ErrorClass::Numerical,
            Error::Invariant(_) => ErrorClass::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
