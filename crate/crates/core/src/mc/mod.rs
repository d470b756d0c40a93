//! Monte Carlo: path generators, ensembles, martingale tests and nested
//! conditional probabilities.

mod ensemble;
mod martingale_test;
mod nested;
mod poisson;
mod rng;

use thiserror::Error;

pub use ensemble::{Ensemble, Grid, PathBundle};
pub use martingale_test::{
    empirical_martingale_test, martingale_test_paths, Functional, MartingaleCheck,
    MartingaleTestReport,
};
pub use nested::{
    nested_conditional, AlwaysTrue, GbmState, GbmSupFuture, InnerDraw, MarkovFuture,
    NestedEstimate, RatioState, RatioWalkFuture, CONTINUITY_BETA,
};
pub use poisson::{compensated, poisson_arrivals, simulate_poisson};
pub use rng::{mean_se, path_rng, KahanSum};

use crate::path::PathError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("ensemble needs at least one path")]
    NoPaths,
    #[error("process {0:?} missing from a bundle")]
    MissingProcess(String),
    #[error("checkpoint t={t} beyond horizon {horizon}")]
    CheckpointBeyondHorizon { t: f64, horizon: f64 },
    #[error("checkpoint needs 0 ≤ s < t, got s={s}, t={t}")]
    BadCheckpoint { s: f64, t: f64 },
    #[error(transparent)]
    Path(#[from] PathError),
}
