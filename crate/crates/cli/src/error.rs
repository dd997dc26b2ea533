use std::path::PathBuf;

use spreadfract::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{context}: {source}")]
    Analysis {
        context: String,
        source: spreadfract::Error,
    },

    #[error(transparent)]
    Core(#[from] spreadfract::Error),

    #[error("output directory {} is locked by another run (remove {} if stale)", .0.display(), .0.join(crate::output::LOCK_FILE).display())]
    Locked(PathBuf),
}

impl CliError {
    /// 0 success, 1 I/O or configuration, 2 numerically degenerate data, 3 internal invariant breach.
    pub fn exit_code(&self) -> i32 {
        let class = match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Locked(_) => return 1,
            CliError::Analysis { source, .. } | CliError::Core(source) => source.class(),
        };
        match class {
            ErrorClass::Input => 1,
            ErrorClass::Numerical => 2,
            ErrorClass::Internal => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches a context string (usually the input path) to core errors.
pub trait Context<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for spreadfract::Result<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Analysis {
            context: context(),
            source,
        })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
