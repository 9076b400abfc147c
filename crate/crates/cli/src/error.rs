use std::path::{Path, PathBuf};

use hardcnf_core::dimacs::DimacsError;
use hardcnf_core::evolve::EvolveError;
use hardcnf_core::external::ExternalError;
use hardcnf_core::trace::TraceError;
use hardcnf_core::CnfError;
use thiserror::Error;

/// Exit code for bad flags, configs and specs.
pub const EXIT_USAGE: u8 = 1;
/// Exit code for failures while doing the work.
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Dimacs { path: PathBuf, source: DimacsError },
    #[error("{}: {source}", path.display())]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Trace { path: PathBuf, source: TraceError },
    #[error(transparent)]
    Formula(#[from] CnfError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    External(#[from] ExternalError),
    #[error("interrupted; partial results were written to {}", .0.display())]
    Interrupted(PathBuf),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Toml { .. }
            | CliError::Json { .. }
            | CliError::Formula(_)
            | CliError::Evolve(EvolveError::InvalidConfig(_) | EvolveError::Formula(_))
            | CliError::External(ExternalError::InvalidSpec(_) | ExternalError::Pattern { .. }) => {
                EXIT_USAGE
            }
            _ => EXIT_RUNTIME,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
