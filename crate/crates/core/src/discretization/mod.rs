//! Discrete phase space: periodic position grid, Gauss–Hermite velocities,
//! and the discrete transport, reaction and projection operators acting on
//! ratios `U_i = f_i / (eta_i M_i)`.

mod fourier;
mod grid;
pub mod quadrature;
mod space;
mod spectral;
mod state;

use thiserror::Error;

pub(crate) use fourier::FourierEngine;
pub use grid::Grid;
pub use space::PhaseSpace;
pub use spectral::spectral_gap;
pub use state::PhaseState;

#[derive(Debug, Error)]
pub enum DiscretizationError {
    #[error("phase-space dimension {0} is not supported (use 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("inconsistent inputs: {0}")]
    Mismatch(String),
    #[error("discrete spectral gap {0:e} is not positive")]
    NonPositiveGap(f64),
}

#[cfg(test)]
mod tests;
