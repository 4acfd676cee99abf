//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("format error: {malformed} of {total} records malformed; wrong input format?")]
    Format { malformed: usize, total: usize },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("registry conflict: address {address} mapped to both {first:?} and {second:?}")]
    RegistryConflict {
        address: String,
        first: String,
        second: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("degenerate embedding: all {dims} dimensions below variability floor {floor}")]
    DegenerateEmbedding { dims: usize, floor: f64 },

    #[error("graph invariant violated: {0}")]
    GraphInvariant(String),

    #[error("stage dependency missing: {0}")]
    StageDependency(PathBuf),

    #[error("artifact version {found} unsupported (expected {expected})")]
    ArtifactVersion { found: u32, expected: u32 },

    #[error("config hash mismatch: {left} in {left_path} vs {right} in {right_path}")]
    ConfigHashMismatch {
        left: String,
        left_path: PathBuf,
        right: String,
        right_path: PathBuf,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
