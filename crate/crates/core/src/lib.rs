//! Core library for detecting coordinated wallet clusters in on-chain
//! governance voting: ingestion, graph construction, representation
//! learning, clustering, and reporting.

pub mod embedder;
pub mod error;
pub mod ingest;
pub mod numcore;
pub mod pipeline;
pub mod sybil;
pub mod synth;
pub mod votegraph;

pub use error::{Error, Result};
