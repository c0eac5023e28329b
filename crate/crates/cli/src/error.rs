use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or out-of-range configuration or input data.
    #[error("config error: {0}")]
    Config(String),

    /// The numerics gave up (optimizer failure, no usable data).
    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: sfg_bsm::Error,
    },

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Classifies a library error raised while working on `context`: bad
/// parameters are configuration problems, the rest numerical failures.
pub fn core_error(context: &str) -> impl Fn(sfg_bsm::Error) -> CliError + '_ {
    move |e| match e {
        sfg_bsm::Error::InvalidParameter { .. }
        | sfg_bsm::Error::InvalidState(_)
        | sfg_bsm::Error::InvalidDensityMatrix(_) => CliError::Config(format!("{context}: {e}")),
        other => CliError::Numerical {
            context: context.to_string(),
            source: other,
        },
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
