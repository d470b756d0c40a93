use serde::Serialize;

use super::{mean_se, McError};
use crate::path::CadlagPath;

/// Adapted weights `h`, reading only the path up to `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    One,
    ValueAtS,
    /// `1{max_{u≤s} X_u ≤ m}` with `m` the ensemble median of that maximum.
    MaxBelowMedian,
    SinValue,
}

impl Functional {
    pub const LIBRARY: [Functional; 4] =
        [Functional::One, Functional::ValueAtS, Functional::MaxBelowMedian, Functional::SinValue];

    pub fn name(self) -> &'static str {
        match self {
            Functional::One => "one",
            Functional::ValueAtS => "value_at_s",
            Functional::MaxBelowMedian => "max_below_median",
            Functional::SinValue => "sin_value",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleCheck {
    pub s: f64,
    pub t: f64,
    pub functional: Functional,
    pub estimate: f64,
    pub se: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleTestReport {
    pub process: String,
    pub k: f64,
    pub checks: Vec<MartingaleCheck>,
}

impl MartingaleTestReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn n_failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }
}

fn max_up_to(path: &CadlagPath, s: f64) -> f64 {
    path.events()
        .iter()
        .take_while(|e| e.time <= s)
        .fold(path.initial_value(), |m, e| m.max(e.value))
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Estimates `E[(X_t - X_s)·h]` over paths for every checkpoint and weight.
/// A check passes iff `|estimate| ≤ k·SE`. Values are read at the checkpoint
/// times, so continuous paths should carry events there.
pub fn martingale_test_paths(
    process: &str,
    paths: &[&CadlagPath],
    checkpoints: &[(f64, f64)],
    functionals: &[Functional],
    k: f64,
) -> Result<MartingaleTestReport, McError> {
    if paths.is_empty() {
        return Err(McError::NoPaths);
    }
    let horizon = paths.iter().map(|p| p.horizon()).fold(f64::INFINITY, f64::min);
    let mut checks = Vec::with_capacity(checkpoints.len() * functionals.len());
    for &(s, t) in checkpoints {
        if !(0.0 <= s && s < t) {
            return Err(McError::BadCheckpoint { s, t });
        }
        if t > horizon {
            return Err(McError::CheckpointBeyondHorizon { t, horizon });
        }
        let incr: Vec<f64> = paths.iter().map(|p| p.value_at(t) - p.value_at(s)).collect();
        let maxes: Vec<f64> = paths.iter().map(|p| max_up_to(p, s)).collect();
        let med = median(&maxes);
        for &f in functionals {
            let terms: Vec<f64> = paths
                .iter()
                .zip(&incr)
                .zip(&maxes)
                .map(|((p, &d), &m)| {
                    let h = match f {
                        Functional::One => 1.0,
                        Functional::ValueAtS => p.value_at(s),
                        Functional::MaxBelowMedian => f64::from(u8::from(m <= med)),
                        Functional::SinValue => p.value_at(s).sin(),
                    };
                    d * h
                })
                .collect();
            let (estimate, se) = mean_se(&terms);
            let tol = k * se;
            checks.push(MartingaleCheck {
                s,
                t,
                functional: f,
                estimate,
                se,
                tol,
                pass: estimate.abs() <= tol,
            });
        }
    }
    Ok(MartingaleTestReport { process: process.to_string(), k, checks })
}

pub fn empirical_martingale_test(
    ensemble: &super::Ensemble,
    process: &str,
    checkpoints: &[(f64, f64)],
    functionals: &[Functional],
    k: f64,
) -> Result<MartingaleTestReport, McError> {
    let paths = ensemble.paths(process)?;
    martingale_test_paths(process, &paths, checkpoints, functionals, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{compensated, simulate_poisson, Ensemble, Grid, PathBundle};

    fn ensemble(seed: u64) -> Ensemble {
        let grid = Grid::new(0.25, 4.0).unwrap();
        Ensemble::build::<McError, _>("poisson", 4000, seed, grid, |_, rng| {
            let n = simulate_poisson(1.0, 4.0, rng)?;
            let c = compensated(&n, 1.0, &grid.times())?;
            Ok(PathBundle::default().with_path("N", n).with_path("Nc", c))
        })
        .unwrap()
    }

    #[test]
    fn compensated_poisson_passes_and_raw_fails() {
        let e = ensemble(3);
        let cps = [(0.0, 1.0), (1.0, 2.0)];
        let ok = empirical_martingale_test(&e, "Nc", &cps, &[Functional::One], 3.0).unwrap();
        assert!(ok.all_pass(), "{ok:?}");
        let raw = empirical_martingale_test(&e, "N", &[(1.0, 2.0)], &[Functional::One], 3.0).unwrap();
        assert!(!raw.all_pass());
        assert!((raw.checks[0].estimate - 1.0).abs() < 4.0 * raw.checks[0].se);
    }

    #[test]
    fn checkpoint_errors() {
        let e = ensemble(1);
        let f = [Functional::One];
        assert!(matches!(
            empirical_martingale_test(&e, "Nc", &[(1.0, 5.0)], &f, 3.0),
            Err(McError::CheckpointBeyondHorizon { .. })
        ));
        assert!(matches!(
            empirical_martingale_test(&e, "Nc", &[(2.0, 1.0)], &f, 3.0),
            Err(McError::BadCheckpoint { .. })
        ));
    }

    #[test]
    fn degenerate_zero_increment_passes() {
        let p = CadlagPath::constant(2.0, 1.0);
        let r = martingale_test_paths("c", &[&p, &p], &[(0.0, 1.0)], &Functional::LIBRARY, 3.0).unwrap();
        assert!(r.all_pass());
    }
}
