use thiserror::Error;

use crate::integrator::BlowUp;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: n={left} vs n={right}")]
    GridMismatch { left: usize, right: usize },

    #[error("field has wrong length: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("non-finite value in {what} at flat index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("coefficients are not Hermitian-symmetric (defect {defect:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("field is not solenoidal (relative divergence {relative:.3e})")]
    NotSolenoidal { relative: f64 },

    #[error("heat factor requires a non-negative time, got {0}")]
    NegativeTime(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid step controls: {0}")]
    InvalidControls(String),

    #[error("{0}")]
    BlowUp(Box<BlowUp>),

    /// Raised by an observer to stop an integration.
    #[error("integration aborted: {0}")]
    Aborted(String),
}
