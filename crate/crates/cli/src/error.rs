use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Io { path: PathBuf, reason: String },

    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("config line {line}, field `{field}`: {reason}")]
    Field {
        line: usize,
        field: String,
        reason: String,
    },

    #[error("{flag}: {reason}")]
    Flag { flag: &'static str, reason: String },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{method} failed at {params}: {source}")]
    Method {
        method: &'static str,
        params: String,
        source: spitzer_core::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Attaches the method name and the failing parameters to a core error.
pub(crate) fn method_err(
    method: &'static str,
    params: impl Into<String>,
) -> impl FnOnce(spitzer_core::Error) -> RunError {
    let params = params.into();
    move |source| RunError::Method {
        method,
        params,
        source,
    }
}
