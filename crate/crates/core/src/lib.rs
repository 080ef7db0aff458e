//! Numerics for the Gaussian isoperimetric problem on (ℝⁿ, γₙ):
//! Bobkov-functional deficits, Ornstein-Uhlenbeck semigroup evaluation,
//! Hermite spectral decompositions, boundary-measure estimators, and
//! nearest half-space fitting.

pub mod deficit;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod hermite;
pub mod ledger;
pub mod nelder_mead;
pub mod quadrature;
pub mod scalar;
pub mod semigroup;
pub mod sets;
pub mod zoo;

pub use deficit::{
    bobkov_functional, boundary_measure_minkowski, boundary_measure_semigroup, ck_integrand,
    ck_lower_bound, deficit, set_deficit, BoundaryEstimate, DeficitReport, PerimeterRoute,
    SetDeficitReport,
};
pub use error::{Error, Result};
pub use experiments::{
    cmd_deficit, cmd_fit, cmd_perimeter, cmd_stability, cmd_verify, DeficitArtifact,
    ExperimentConfig, FitArtifact, PerimeterArtifact, StabilityCurve, StabilityPoint,
    VerifyArtifact,
};
pub use fitting::{
    fit_halfspace_set, fit_phi_affine, halfspace_symmetric_difference, round_to_halfspace,
    FitResult, HalfSpace, RestartRecord,
};
pub use hermite::{MultiIndex, SpectralFunction};
pub use ledger::{
    any_assert_failure, run_default_ledger, run_ledger, write_ledger_outputs, CheckMode,
    CheckResult, LedgerConfig,
};
pub use nelder_mead::{nelder_mead, NelderMeadResult};
pub use quadrature::{gauss_hermite_rule, integrate, mc_rule, mc_rule_antithetic, QuadratureRule};
pub use semigroup::{FunctionHandle, HJet, Jet, SemigroupState};
pub use sets::SetHandle;
