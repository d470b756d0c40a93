//! The worked cases: generators wired to checkers, with the verdict each
//! check is expected to reach.
//!
//! | id | content |
//! |----|---------|
//! | `s1_first_jump` | `Z = 1_{[0,S)}`, `γ = t∧S`, `U = e^{t∧S}1_{[0,S)}` |
//! | `s2_nonunique` | a second representation `U″` of the same `Z` from `γ′` |
//! | `s3_counterexample` | `W = 2^N e^{-t}`, `ρ = sup{W = W*}` has no representation |
//! | `s4_continuous_doob` | `U = exp(B - t/2)` and the maximal identity |
//! | `s5_deterministic` | `ρ = T` fixed has no representation |
//! | `s6_jump_removal` | removing the jump of `U″` at `S′` gives back `U` |
//! | `s7_interpolation` | compensator swaps `γ̂_c` between `γ` and `γ′` |

mod counter;
mod deterministic;
mod doob;
mod jump;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::calc::CalcError;
use crate::finite::{MmrError, ModelError};
use crate::mc::{Ensemble, Grid, MartingaleTestReport, McError};
use crate::path::PathError;
use crate::representation::ReprError;

pub use counter::{ratio_walk, RatioWalkPath};
pub use jump::snap_to_lattice;

/// Checkpoint pairs `(s, t)` used by every scenario-level martingale test.
pub const MARTINGALE_CHECKPOINTS: [(f64, f64); 2] = [(0.5, 1.0), (1.0, 2.0)];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario id {0:?}")]
    UnknownId(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mmr(#[from] MmrError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    S1FirstJump,
    S2Nonunique,
    S3Counterexample,
    S4ContinuousDoob,
    S5Deterministic,
    S6JumpRemoval,
    S7Interpolation,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 7] = [
        ScenarioId::S1FirstJump,
        ScenarioId::S2Nonunique,
        ScenarioId::S3Counterexample,
        ScenarioId::S4ContinuousDoob,
        ScenarioId::S5Deterministic,
        ScenarioId::S6JumpRemoval,
        ScenarioId::S7Interpolation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::S1FirstJump => "s1_first_jump",
            ScenarioId::S2Nonunique => "s2_nonunique",
            ScenarioId::S3Counterexample => "s3_counterexample",
            ScenarioId::S4ContinuousDoob => "s4_continuous_doob",
            ScenarioId::S5Deterministic => "s5_deterministic",
            ScenarioId::S6JumpRemoval => "s6_jump_removal",
            ScenarioId::S7Interpolation => "s7_interpolation",
        }
    }

    /// Default parameters. Jump scenarios use a power-of-two `dt`.
    pub fn defaults(self) -> RunParams {
        let base = RunParams {
            n_paths: 10_000,
            seed: 1,
            dt: 1.0 / 64.0,
            horizon: 16.0,
            k: 3.0,
            residual_tol: None,
            n_inner: 2_000,
        };
        match self {
            ScenarioId::S3Counterexample => RunParams { horizon: 50.0, n_inner: 50_000, ..base },
            ScenarioId::S4ContinuousDoob => RunParams { n_paths: 2_000, dt: 1e-3, horizon: 20.0, ..base },
            ScenarioId::S5Deterministic => RunParams { n_paths: 100, horizon: 2.0, ..base },
            _ => base,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| ScenarioError::UnknownId(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunParams {
    pub n_paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
    /// Standard-error multiplier for statistical checks.
    pub k: f64,
    /// Overrides the certificate residual tolerance.
    pub residual_tol: Option<f64>,
    /// Inner resamples per nested estimate (`q̂` in s3, every estimate in s4).
    pub n_inner: usize,
}

impl RunParams {
    fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::BadParams(m));
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.k > 0.0) {
            return bad(format!("k must be positive, got {}", self.k));
        }
        if self.n_inner == 0 {
            return bad("n_inner must be at least 1".into());
        }
        Ok(())
    }
}

/// One line of a report. `target` is set for two-sided checks
/// (`|estimate - target| ≤ tol`) and absent for one-sided bounds and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub pass: bool,
    /// The verdict this check should reach.
    pub expected: bool,
}

impl CheckResult {
    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            estimate: value,
            se: 0.0,
            tol,
            target: None,
            pass: value <= tol,
            expected: true,
        }
    }

    pub fn near(name: impl Into<String>, estimate: f64, se: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            se,
            tol,
            target: Some(target),
            pass: (estimate - target).abs() <= tol,
            expected: true,
        }
    }

    pub fn flag(name: impl Into<String>, estimate: f64, se: f64, pass: bool) -> Self {
        Self { name: name.into(), estimate, se, tol: 0.0, target: None, pass, expected: true }
    }

    /// Every path satisfies a predicate: the estimate is the passing fraction.
    pub fn all_of(name: impl Into<String>, ok: impl IntoIterator<Item = bool>) -> Self {
        let (mut yes, mut n) = (0usize, 0usize);
        for b in ok {
            n += 1;
            yes += usize::from(b);
        }
        let frac = if n == 0 { f64::NAN } else { yes as f64 / n as f64 };
        Self::near(name, frac, 0.0, 1.0, 0.0)
    }

    pub fn expecting(mut self, expected: bool) -> Self {
        self.expected = expected;
        self
    }

    pub fn matches(&self) -> bool {
        self.pass == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub n_paths: usize,
    pub grid: Grid,
    pub checks: Vec<CheckResult>,
}

impl ScenarioReport {
    pub fn matches_expected(&self) -> bool {
        self.checks.iter().all(CheckResult::matches)
    }

    pub fn mismatches(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.matches()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub ensemble: Ensemble,
}

fn martingale_checks(label: &str, report: &MartingaleTestReport) -> Vec<CheckResult> {
    report
        .checks
        .iter()
        .map(|c| {
            let name = format!("martingale[{label}] s={} t={} h={}", c.s, c.t, c.functional.name());
            CheckResult::near(name, c.estimate, c.se, 0.0, c.tol)
        })
        .collect()
}

fn grid_for(id: ScenarioId, params: &RunParams) -> Result<Grid, ScenarioError> {
    Ok(match id {
        ScenarioId::S4ContinuousDoob => Grid::new(params.dt, params.horizon)?,
        _ => Grid::dyadic(params.dt, params.horizon)?,
    })
}

/// Simulates the ensemble of a scenario. s6 and s7 share the s2 ensemble.
pub fn build(id: ScenarioId, n_paths: usize, seed: u64, grid: Grid) -> Result<Ensemble, ScenarioError> {
    match id {
        ScenarioId::S1FirstJump => jump::build_first_jump(n_paths, seed, grid),
        ScenarioId::S2Nonunique | ScenarioId::S6JumpRemoval | ScenarioId::S7Interpolation => {
            jump::build_nonunique(id.as_str(), n_paths, seed, grid)
        }
        ScenarioId::S3Counterexample => counter::build(n_paths, seed, grid),
        ScenarioId::S4ContinuousDoob => doob::build(n_paths, seed, grid),
        ScenarioId::S5Deterministic => deterministic::build(n_paths, seed, grid),
    }
}

/// Builds the ensemble and runs every check of the scenario.
pub fn run(id: ScenarioId, params: &RunParams) -> Result<ScenarioRun, ScenarioError> {
    params.validate()?;
    let grid = grid_for(id, params)?;
    if id != ScenarioId::S3Counterexample && grid.horizon < 2.0 {
        return Err(ScenarioError::BadParams("horizon must be at least 2".into()));
    }
    let ensemble = build(id, params.n_paths, params.seed, grid)?;
    let checks = match id {
        ScenarioId::S1FirstJump => jump::check_first_jump(&ensemble, params)?,
        ScenarioId::S2Nonunique => jump::check_nonunique(&ensemble, params)?,
        ScenarioId::S6JumpRemoval => jump::check_removal(&ensemble, params)?,
        ScenarioId::S7Interpolation => jump::check_interpolation(&ensemble, params)?,
        ScenarioId::S3Counterexample => counter::check(&ensemble, params)?,
        ScenarioId::S4ContinuousDoob => doob::check(&ensemble, params)?,
        ScenarioId::S5Deterministic => deterministic::check(&ensemble, params)?,
    };
    let report = ScenarioReport {
        scenario: id.as_str().to_string(),
        seed: params.seed,
        n_paths: params.n_paths,
        grid,
        checks,
    };
    Ok(ScenarioRun { report, ensemble })
}
