//! Linear reaction–transport kinetics: admissibility and equilibria of
//! first-order reaction networks, explicit decay certificates, and a
//! Fourier/Gauss–Hermite solver with diagnostics to check them against.

pub mod certificates;
pub mod diagnostics;
pub mod discretization;
pub mod network;
pub mod solver;

pub use certificates::{CertificateError, CertificateInput, CertificateReport, WholeSpaceEnvelope, WinningProof};
pub use diagnostics::{Check, DiagnosticsSeries, Sample, Status, SweepRow, SweepTable, Verdict};
pub use discretization::{spectral_gap, DiscretizationError, Grid, PhaseSpace, PhaseState};
pub use network::{
    compute_equilibrium, shortest_paths, shortest_paths_with, EquilibriumProfile, NetworkError, PathSelection,
    PathTable, ReactionNetwork, ReactionPath, ValidationVerdict, Violation,
};
pub use solver::{DomainMode, InitialCondition, RunOutput, Simulation, SolverConfig, SolverError};
