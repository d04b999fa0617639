//! Coupled vortex equations for a line-bundle extension on the torus:
//! gradient flow on the modified Donaldson functional, an independent Newton
//! solve, the assembled rank-2 curvature, and stability certificates.

mod certificate;
mod flow;
mod functional;
mod newton;
mod rank2;
mod residual;
mod spec;
mod state;
mod sweep;

pub use certificate::{q_diagnostic, stability_certificate, Certificate, QDiagnostic};
pub use flow::{flow_step, solve, solve_from, Outcome, SolveReport, StepInfo};
pub use functional::{
    first_block_log_ratio, first_variation, functional_along_geodesic, functional_closed_form, functional_trace,
    geodesic_point, path_increment, second_variation, second_variation_connection, Coordinates, Direction,
};
pub use newton::{newton_solve, NewtonReport};
pub use rank2::{assemble_rank2, Rank2Report};
pub use residual::{residual, Residual};
pub use spec::{canonical_harmonic_seed, FlowControls, PhiSeed, ProblemSpec};
pub use state::{HistoryEntry, SolverState};
pub use sweep::{sweep, SweepReport, SweepRow};

use thiserror::Error;

use crate::stability::StabilityError;
use crate::torus::FieldError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("non-finite values at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("functional keeps increasing at iteration {iteration} even with step {step:e}; reduce the step")]
    StepTooLarge { iteration: usize, step: f64 },
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("empty history")]
    EmptyHistory,
}
