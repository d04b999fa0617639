use thiserror::Error;

use hk_core::stability::StabilityError;
use hk_core::torus::FieldError;
use hk_core::vortex::SolverError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0} (schema: README, section Configuration)")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{0}")]
    Check(String),
}
