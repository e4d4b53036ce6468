use std::path::PathBuf;

/// Failures of the harness itself. Numerical failures inside a probe are
/// recorded in the report instead.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("config: {0}")]
    Parse(String),

    #[error("config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] projdiff_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Invalid { field: field.into(), reason: reason.into() }
    }

    /// Whether the failure is the user's input rather than the run.
    pub fn is_input(&self) -> bool {
        matches!(self, HarnessError::Read { .. } | HarnessError::Parse(_) | HarnessError::Invalid { .. })
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
