use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mollifier rho_{n} is not resolved by grid spacing {dx} (need dx < 1/n)")]
    Resolution { n: u32, dx: f64 },

    #[error("unsupported derivative order {0} (expected 0, 1 or 3)")]
    UnsupportedOrder(u32),

    #[error("peakons {i} and {j} collide at t = {time} (gap {gap:e})")]
    Collision {
        time: f64,
        i: usize,
        j: usize,
        gap: f64,
    },

    #[error("momentum p[{index}] = {value} is not positive at t = {time}")]
    NonPositiveMomentum { time: f64, index: usize, value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    EigenNonConvergence { iterations: usize },

    #[error("blow-up guard: max|u| = {max_u} exceeds twice the initial value {initial} at t = {time}")]
    BlowUp { time: f64, max_u: f64, initial: f64 },

    #[error("modulation lost: orthogonality residual has no sign change on [{lo}, {hi}]")]
    ModulationLoss { lo: f64, hi: f64 },

    #[error("jump lost at t = {time}: a = {a:e} below threshold {threshold:e}")]
    JumpLost { time: f64, a: f64, threshold: f64 },

    #[error("characteristic left the grid at t = {last_time} (position {position})")]
    DomainExit { last_time: f64, position: f64 },

    #[error("time index {index} not usable (trajectory has {len} stored steps)")]
    TimeIndex { index: usize, len: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
