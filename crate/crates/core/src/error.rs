use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("smoothing parameter must be nonnegative, got {0}")]
    NegativeSmoothing(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("zero pivot in incomplete factorization at row {0}")]
    SingularPivot(usize),

    #[error("raster {path}: {reason}")]
    Raster { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("time step fell below minimum ({dt:.6e} s < {dt_min:.6e} s) at t = {time:.6e} s")]
    TimeStepUnderflow { time: f64, dt: f64, dt_min: f64 },

    #[error("non-finite state after step at t = {0:.6e} s")]
    NonFiniteState(f64),

    #[error("run stopped by observer at t = {0:.6e} s")]
    Stopped(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
