//! Observables and verification statistics: conductance, the Lyapunov
//! functional, the algebraic repulsion identities with their bounds, the
//! two-sample Kolmogorov–Smirnov machinery, and the ensemble experiments
//! built on them.

mod dd;
mod identities;
mod ks;
mod monte;
mod observables;

pub use identities::{
    proof_identity_sums, proof_identity_z, relative_residual, sample_domain_point, SumIdentities,
    ZIdentity,
};
pub use ks::{ks_distance, ks_two_sample, TwoSampleReport};
pub use monte::{
    dmpk_conductance_ensemble, law_equality_test, lyapunov_growth_probe,
    matrix_conductance_ensemble, ordering_test, ucf_variance, ConductanceEnsemble, GrowthProbe,
    LawComparison, OrderingReport, UcfReport,
};
pub use observables::{
    landauer_g, lyapunov_f, mean_variance, variance_std_error, EnsembleSummary,
};
