//! Exact finite-probability engine: refining-partition filtrations over a
//! finite outcome space, the projections of a random time, honest-time
//! checks, and the feasibility search for a maximal representation.

mod analysis;
mod mmr;
mod model;
mod suite;

pub use analysis::{
    all_stopping_times, azema_analysis, honest_support_checks, is_honest, last_sojourn,
    relative_martingale_check, sup_representing_set, vanishing_time, z_vanishes_after_r,
    AnalysisError, AzemaAnalysis, HonestSupportReport, RelativeMartingaleReport, Witness,
};
pub use mmr::{
    mmr_construct, mmr_search, modif_predictable, InfeasibleCertificate, MmrConstruction, MmrError,
    MmrSearch, ModifOutcome, Violation,
};
pub use model::{moves_of, q, AdaptedProcess, FiniteProbModel, FiniteRandomTime, ModelError, Q};
pub use suite::{run_finite_suite, Fault, SuiteConfig, SuiteError, SuiteReport, SuiteWitness, Tally, MAX_PERIODS};
