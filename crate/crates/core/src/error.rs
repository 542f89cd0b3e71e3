use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice specification: {0}")]
    InvalidSpec(String),

    #[error("{what} {index} is out of range for a lattice of {size} sites")]
    OutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("coordinates {coords:?} lie outside extent {extent:?}")]
    CoordinatesOutOfRange {
        coords: Vec<usize>,
        extent: Vec<usize>,
    },

    #[error("two-particle input requires distinct sites, got {0} twice")]
    IdenticalSites(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("localization fit failed: only {points} points inside the fit window (need 6)")]
    FitFailure { points: usize },

    #[error("no mass inside the requested window")]
    ZeroMass,

    #[error("zero vector has no staggering")]
    ZeroVector,

    #[error("invalid region partition: {0}")]
    InvalidPartition(String),

    #[error("Fock oracle refuses N = {size} (limit {limit})")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("invalid ensemble configuration: {0}")]
    InvalidEnsemble(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
