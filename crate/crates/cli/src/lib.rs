//! Plumbing behind the `bai` binary: config-file schemas, CSV and SVG
//! output, and the figure-reproduction recipes.

pub mod commands;
pub mod files;
pub mod recipes;
pub mod svg;
pub mod table;

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid input; `path` points into the JSON document.
    #[error("{file}: invalid input at `{path}`: {message}")]
    Validation { file: String, path: String, message: String },
    #[error("{file}: {message}")]
    SchemaMismatch { file: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } | CliError::SchemaMismatch { .. } => 1,
            CliError::Io { .. } | CliError::Runtime(_) => 2,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn invalid(file: &Path, message: impl ToString) -> CliError {
        CliError::Validation {
            file: file.display().to_string(),
            path: ".".into(),
            message: message.to_string(),
        }
    }
}
