use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum McfError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("coordinate {coord} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { coord: f64, lo: f64, hi: f64 },

    #[error("unsupported operation for this geometry: {0}")]
    Unsupported(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("ill-posed contact angle: |phi| = {0} must be < 1")]
    IllPosedAngle(f64),

    #[error("contact angle too steep: |phi| = {value} exceeds the limit {limit}")]
    AngleTooSteep { value: f64, limit: f64 },

    #[error("invalid contact angle specification: {0}")]
    InvalidAngle(String),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("ghost layer has not been closed; call ghost_fill first")]
    GhostsNotClosed,

    #[error("field does not match the grid ({0})")]
    GridMismatch(String),

    #[error("singular linear system (block {0})")]
    SingularSystem(usize),

    #[error("Newton iteration stagnated at eps = {eps}: residual {residual:e} after {iterations} iterations")]
    NewtonStagnation {
        eps: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("speed extrapolation did not stabilise: last change {change:e} exceeds {limit:e}")]
    ScheduleExhausted { change: f64, limit: f64 },

    #[error("non-finite state after time step at t = {0} (time step too large?)")]
    StepBlowup(f64),

    #[error("no convergence after {0} steps")]
    MaxSteps(usize),

    #[error("insufficient history: need a window of {needed}, have {available}")]
    InsufficientHistory { needed: f64, available: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, McfError>;
