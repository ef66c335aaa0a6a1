// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = QsimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error("{context}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("trace drifted by {drift:.3e} at t = {time:.6} (step {step})")]
    TraceDrift { time: f64, step: usize, drift: f64 },

    #[error("norm drifted by {drift:.3e} at t = {time:.6} (step {step})")]
    NormDrift { time: f64, step: usize, drift: f64 },

    #[error("non-finite value in state at t = {time:.6} (step {step})")]
    NonFinite { time: f64, step: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl QsimError {
    /// True for failures raised while integrating, as opposed to bad input.
    pub fn is_integrator_abort(&self) -> bool {
        matches!(self, Self::TraceDrift { .. } | Self::NormDrift { .. } | Self::NonFinite { .. })
    }
}
