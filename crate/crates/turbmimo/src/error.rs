use std::io;
use std::path::PathBuf;

/// Errors surfaced by the driver and the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Simulation(#[from] turbmimo_core::Error),
    #[error("{0} validation check(s) failed")]
    Validation(usize),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 1 validation failure, 2 usage or configuration
    /// error, 3 IO error.
    pub fn exit_code(&self) -> u8 {
        use turbmimo_core::Error as E;
        match self {
            AppError::Validation(_) => 1,
            AppError::Parse { .. } | AppError::Config(_) => 2,
            AppError::Io { .. } | AppError::Csv { .. } => 3,
            AppError::Simulation(e) => match e {
                E::Realization { .. }
                | E::NotContraction(_)
                | E::EmptyEnsemble
                | E::EnsembleTooSmall { .. }
                | E::RailCount { .. } => 1,
                _ => 2,
            },
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
