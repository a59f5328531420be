use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("component {component} has {got} values, grid expects {expected}")]
    Shape {
        component: usize,
        got: usize,
        expected: usize,
    },

    #[error("numerical instability at t = {t} (step {step})")]
    Instability { t: f64, step: u64 },

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("degenerate force: {0}")]
    DegenerateForce(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty averaging window: {0}")]
    EmptyWindow(String),

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("schema mismatch in {}: {message}", .path.display())]
    Schema { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
