//! The transmission-eigenvalue diffusion: drift/diffusion coefficients in
//! both charts, cutoff regularization, the near-degenerate start ladder, a
//! generic Coulomb-repulsion particle engine, and the adaptive path
//! integrator shared by all of them.

mod coeffs;
mod coulomb;
mod engine;

pub use coeffs::{
    degenerate_start, dmpk_diffusion, dmpk_drift, lambda_coefficients, regularized_diffusion,
    regularized_drift, RegularizationConfig,
};
pub use coulomb::{dmpk_as_coulomb, CoulombSystem};
pub use engine::{
    dmpk_step, solve_chart_pair, solve_coulomb, solve_pair_dmpk, solve_path, solve_path_driven,
    BrownianTable, PathRecord,
};
