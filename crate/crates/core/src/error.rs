//! Error types shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CtflowError {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("grid too coarse: pixel {pixel_cm} cm exceeds {limit_cm} cm (H/20)")]
    GridTooCoarse { pixel_cm: f64, limit_cm: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("CFL violation: max|u|*dt/dx = {cfl} exceeds {limit}")]
    CflViolation { cfl: f64, limit: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("acquisition window [0, {needed_s} s] exceeds movie span {available_s} s")]
    AcquisitionWindow { needed_s: f64, available_s: f64 },

    #[error("artifact store: {0}")]
    Store(String),

    #[error("artifact store i/o at {path}: {source}")]
    StoreIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training aborted at iteration {iter}: {reason}")]
    TrainAbort { iter: usize, reason: String },

    #[error("metrics error: {0}")]
    Metrics(String),

    #[error("statistics error: {0}")]
    Stats(String),
}

pub type Result<T> = std::result::Result<T, CtflowError>;
