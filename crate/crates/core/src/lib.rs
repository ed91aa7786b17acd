//! Simulation of transmission eigenvalues in disordered quantum wires.
//!
//! Two coupled pictures of the same stochastic process:
//!
//! * [`sde`] integrates the DMPK system of interacting transmission
//!   eigenvalues `T_1 < ... < T_N` in `(0, 1)`, with singular Coulomb-type
//!   level repulsion, in either the `T` or the `λ = 1/T` chart, plus a
//!   generic engine for arbitrary Coulomb-repulsion particle systems.
//! * [`transfer`] evolves the microscopic `2N×2N` pseudo-unitary transfer
//!   matrix by multiplicative matrix Brownian motion and extracts the
//!   transmission spectrum from its upper-left block.
//!
//! [`noise`] supplies the block-matrix Brownian increments with the exact
//! symmetry-class couplings shared by both engines, [`analysis`] carries the
//! observables and statistical checks (conductance, Lyapunov functional,
//! algebraic repulsion identities, Kolmogorov–Smirnov comparison of the two
//! engines), and [`ensemble`] runs reproducible parallel path ensembles.

pub mod analysis;
pub mod ensemble;
mod error;
pub mod noise;
pub mod sde;
pub mod state;
pub mod transfer;

pub use error::{Error, Result};
pub use state::{Chart, LambdaState, SolverConfig, SymmetryClass, TransmissionState};
