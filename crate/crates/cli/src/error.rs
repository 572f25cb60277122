use std::path::PathBuf;

use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{file}: at {pointer}: {message}")]
    Schema {
        file: String,
        pointer: String,
        message: String,
    },

    /// Structural defects of a protocol file, one message per defect.
    #[error("{file}: {}", defects.join("; "))]
    Defects { file: String, defects: Vec<String> },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] cpv_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Schema { .. } => "schema",
            CliError::Defects { .. } => "defects",
            CliError::Usage(_) => "usage",
            CliError::Core(cpv_core::Error::Resource(_)) => "resource",
            CliError::Core(_) => "input",
        }
    }

    /// Machine-readable body of the error report.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            CliError::Parse { line, column, .. } => {
                v["line"] = json!(line);
                v["column"] = json!(column);
            }
            CliError::Schema { pointer, .. } => v["pointer"] = json!(pointer),
            CliError::Defects { defects, .. } => v["defects"] = json!(defects),
            _ => {}
        }
        v
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
