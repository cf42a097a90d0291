use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] percmon_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("conflicting manifests: {0}")]
    ConflictingManifests(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => "not_found",
            CliError::Io { .. } => "io_error",
            CliError::Parse { .. } => "parse_error",
            CliError::Usage(_) => "usage",
            CliError::MissingInput(_) => "missing_input",
            CliError::ConflictingManifests(_) => "conflicting_manifests",
            CliError::Csv(_) => "csv_error",
        }
    }

    /// 2 for command-line mistakes, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    fn details(&self) -> Value {
        match self {
            CliError::Io { path, .. } | CliError::Parse { path, .. } => json!({ "path": path }),
            CliError::Core(percmon_core::Error::BudgetExceeded { partial_kappa }) => {
                json!({ "partial_kappa": partial_kappa })
            }
            _ => Value::Null,
        }
    }

    pub fn envelope(&self) -> Value {
        let mut error = json!({ "code": self.code(), "message": self.to_string() });
        let details = self.details();
        if !details.is_null() {
            error["details"] = details;
        }
        json!({ "status": "error", "error": error })
    }
}
