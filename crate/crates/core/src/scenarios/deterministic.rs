//! s5: `ρ = T` fixed. Then `Z = 1_{[0,T)}` and `A = 1_{[T,∞)}` are
//! deterministic, `A` jumps at `T` where `Z_T = 0`, and no `U` represents `Z`.

use super::{martingale_checks, CheckResult, RunParams, ScenarioError, MARTINGALE_CHECKPOINTS};
use crate::finite::{azema_analysis, mmr_search, q, FiniteProbModel, FiniteRandomTime, MmrSearch};
use crate::mc::{martingale_test_paths, Ensemble, Functional, Grid, PathBundle};
use crate::path::{path_from_aligned, Aligned, CadlagPath};
use crate::representation::{extract_gamma, sde_solve_mmr, verify_mmr};

/// The fixed time.
pub const T: f64 = 1.0;
/// Periods of the binary tree used for the finite certificate; `ρ` = 2.
const TREE_PERIODS: usize = 3;

pub(super) fn build(n: usize, seed: u64, grid: Grid) -> Result<Ensemble, ScenarioError> {
    let h = grid.horizon;
    Ensemble::build("s5_deterministic", n, seed, grid, |_, _| {
        Ok(PathBundle::default()
            .with_scalar("rho", T)
            .with_path("Z", CadlagPath::step(1.0, &[(T, 0.0)], h)?)
            .with_path("A", CadlagPath::step(0.0, &[(T, 1.0)], h)?))
    })
}

fn minus_a_plus(a: &CadlagPath, gamma: &CadlagPath) -> Result<CadlagPath, ScenarioError> {
    let al = Aligned::new(&[gamma, a]);
    Ok(path_from_aligned(&al, 0.0, |k| al.after(0, k) - al.after(1, k), a.horizon(), a.tail())?)
}

pub(super) fn check(ens: &Ensemble, params: &RunParams) -> Result<Vec<CheckResult>, ScenarioError> {
    let model = FiniteProbModel::homogeneous_binary(TREE_PERIODS, q(1, 2));
    let rho = FiniteRandomTime::constant(&model, 2)?;
    let analysis = azema_analysis(&model, &rho);
    let infeasible = matches!(mmr_search(&model, &analysis.z, &analysis.a_opt)?, MmrSearch::Infeasible(_));
    let mut checks = vec![CheckResult::flag("finite_mmr_search_infeasible", 1.0, 0.0, infeasible)];

    let b = &ens.bundles[0];
    let (z, a) = (b.path("Z")?, b.path("A")?);
    let atom = a.jump_at(T);
    checks.push(CheckResult::flag("a_atom_where_z_vanishes", atom, 0.0, atom > 0.0 && z.value_at(T) == 0.0));

    // The two natural candidates: γ = 0 (U = Z) and γ = A.
    for (label, gamma) in [("gamma=0", CadlagPath::constant(0.0, a.horizon())), ("gamma=A", a.clone())] {
        let u = sde_solve_mmr(z, &gamma)?;
        let mut cert = verify_mmr(z, &u, Some(a), params.residual_tol)?;
        let driver = minus_a_plus(a, &extract_gamma(&u)?)?;
        let paths: Vec<&CadlagPath> = ens.bundles.iter().map(|_| &driver).collect();
        let report = martingale_test_paths(
            "-A+gamma",
            &paths,
            &MARTINGALE_CHECKPOINTS,
            &Functional::LIBRARY,
            params.k,
        )?;
        cert = cert.with_martingale_report(&report);
        checks.push(CheckResult::at_most(format!("{label}.max_residual"), cert.max_residual, cert.tolerance).expecting(label == "gamma=0"));
        let valid = cert.verdict.is_valid();
        checks.push(CheckResult::flag(format!("{label}.certificate_valid"), f64::from(u8::from(valid)), 0.0, valid).expecting(false));
        if label == "gamma=0" {
            // -A moves only across T, and the weights 0 and sin(0) kill it.
            let named = martingale_checks("-A+gamma[gamma=0]", &report);
            for (c, raw) in named.into_iter().zip(&report.checks) {
                let moves = raw.s < T && T <= raw.t;
                let weighted = matches!(raw.functional, Functional::One | Functional::MaxBelowMedian);
                checks.push(c.expecting(!(moves && weighted)));
            }
        }
    }
    Ok(checks)
}
