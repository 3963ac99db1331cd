//! Split-step time integration and the torus, whole-space and
//! diffusion-limit experiments.

mod config;
mod heat;
mod runs;
mod stepper;

use thiserror::Error;

use crate::certificates::CertificateError;
use crate::discretization::DiscretizationError;
use crate::network::NetworkError;

pub use config::{DomainMode, InitialCondition, SolverConfig};
pub use heat::HeatReference;
pub use runs::{run_epsilon_sweep, run_torus, run_whole_space, RunOutput, Simulation};
pub use stepper::Stepper;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error("solution became non-finite at t = {t}")]
    NonFinite { t: f64 },
}
