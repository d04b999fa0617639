//! Discrete geometry of the flat square torus of area `2π` and of the
//! degree-`δ` line bundles over it.

mod field;
mod grid;

pub mod fft;
pub mod hodge;
pub mod ops;
pub mod snapshot;

pub use field::{ConformalExponent, FormType, TwistedField, Weights};
pub use grid::TorusGrid;
pub use num_complex::Complex64;
pub use hodge::{
    expected_harmonic_dimension, harmonic_dimension, harmonic_project, harmonic_project_from, HarmonicDimension, Projection,
    NULL_SINGULAR_THRESHOLD, PROJECTION_TOL,
};
pub use ops::{curvature, dbar, dbar_adj, integrate, laplacian, laplacian_raw, Dbar, DBAR_SCALE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid size {0} must be even and at least 16")]
    InvalidGrid(usize),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("twist mismatch: operator has degree {expected}, field has {found}")]
    TwistMismatch { expected: i64, found: i64 },
    #[error("form mismatch: expected {expected:?}, found {found:?}")]
    FormMismatch { expected: FormType, found: FormType },
    #[error("expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("linear solve stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolveFailed { iterations: usize, residual: f64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
