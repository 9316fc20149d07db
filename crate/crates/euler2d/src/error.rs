//! Error types shared across the library.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid construction rejected the requested size.
    #[error("grid size {n} is invalid: need a power of two >= 16")]
    InvalidGridSize { n: usize },

    /// Two fields that must live on the same grid do not.
    #[error("grid mismatch: {left} vs {right} points per side")]
    GridMismatch { left: usize, right: usize },

    /// A dyadic block index outside `-1..=j_max` was requested.
    #[error("block index {j} out of range -1..={j_max}")]
    BlockOutOfRange { j: i32, j_max: i32 },

    /// Inadmissible exponents or parameters for a norm or inequality check.
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    /// Bad caller-supplied data (initial state, config values, file contents).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The density lost its positive lower bound.
    #[error("vacuum: density minimum {min_rho:.3e} is not safely positive")]
    Vacuum { min_rho: f64 },

    /// The variable-coefficient pressure iteration failed to reach tolerance.
    #[error(
        "pressure iteration did not converge: residual {residual:.3e} after {iterations} iterations (tol {tol:.1e})"
    )]
    PressureDiverged {
        residual: f64,
        iterations: usize,
        tol: f64,
    },

    /// The time stepper produced a non-finite value or tripped the gradient
    /// ceiling; the last valid state is preserved for post-mortem output.
    #[error("solution lost regularity at t = {t:.6}: {reason}")]
    BlowUp {
        t: f64,
        reason: String,
        last_valid: Box<crate::solver::FlowState>,
    },

    /// A transported probe field became non-finite during time stepping.
    #[error("transported field became non-finite at t = {t:.6}")]
    TransportBlowUp { t: f64 },

    /// A data file (series, checkpoint, report) is missing or malformed.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
