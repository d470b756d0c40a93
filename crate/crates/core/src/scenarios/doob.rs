//! s4: `U = exp(B_t - t/2)` and `ρ = sup{U = U*}`.
//!
//! For a continuous martingale vanishing at infinity,
//! `P[sup_{s>t} U_s ≥ λ | F_t] = U_t/λ` on `{λ ≥ U_t}`; with `λ = U*_t` this
//! is `Z_t = U_t/U*_t`. Outer paths keep only checkpoint summaries and a
//! coarse sample of `U`; nested estimates restart from `(t, U_t)`.

use rand_distr::{Distribution, StandardNormal};

use super::{martingale_checks, CheckResult, RunParams, ScenarioError, MARTINGALE_CHECKPOINTS};
use crate::mc::{
    martingale_test_paths, mean_se, nested_conditional, Ensemble, Functional, GbmState,
    GbmSupFuture, Grid, PathBundle,
};
use crate::path::{CadlagPath, Event, EventKind, TailFlag};

pub const CHECKPOINTS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
pub const THRESHOLD_MULTIPLES: [f64; 4] = [1.25, 1.5, 2.0, 3.0];
/// Spacing of the stored coarse sample of `U`.
const COARSE: f64 = 0.125;

fn step_of(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

pub(super) fn build(n: usize, seed: u64, grid: Grid) -> Result<Ensemble, ScenarioError> {
    if CHECKPOINTS.iter().any(|&t| t >= grid.horizon) {
        return Err(ScenarioError::BadParams("horizon must exceed the last checkpoint 8".into()));
    }
    let steps = step_of(grid.horizon, grid.dt);
    let sqrt_dt = grid.dt.sqrt();
    // Grid steps nearest to the multiples of COARSE, so checkpoints are hit exactly.
    let mut coarse_steps: Vec<usize> =
        (1..=(grid.horizon / COARSE).floor() as usize).map(|j| step_of(j as f64 * COARSE, grid.dt).min(steps)).collect();
    coarse_steps.dedup();
    coarse_steps.retain(|&k| k > 0);
    Ensemble::build("s4_continuous_doob", n, seed, grid, |_, rng| {
        let mut logs = Vec::with_capacity(steps + 1);
        let mut x = 0.0f64;
        logs.push(x);
        for _ in 0..steps {
            let z: f64 = StandardNormal.sample(rng);
            x += sqrt_dt * z - 0.5 * grid.dt;
            logs.push(x);
        }
        // suffix[k] = max of logs[k..]
        let mut suffix = logs.clone();
        for k in (0..steps).rev() {
            suffix[k] = suffix[k].max(suffix[k + 1]);
        }
        let mut bundle = PathBundle::default();
        let mut running = f64::NEG_INFINITY;
        let mut argmax = 0usize;
        for (k, &l) in logs.iter().enumerate() {
            if l >= running {
                running = l;
                argmax = k;
            }
        }
        for &t in &CHECKPOINTS {
            let k = step_of(t, grid.dt);
            let max_to_t = logs[..=k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let returns = k < steps && suffix[k + 1] >= max_to_t;
            bundle = bundle
                .with_scalar(&format!("U_{t}"), logs[k].exp())
                .with_scalar(&format!("Ustar_{t}"), max_to_t.exp())
                .with_scalar(&format!("rho_gt_{t}"), f64::from(u8::from(returns)));
        }
        let events: Vec<Event> =
            coarse_steps.iter().map(|&k| Event::new(k as f64 * grid.dt, logs[k].exp(), EventKind::Grid)).collect();
        let coarse = CadlagPath::new(1.0, events, grid.horizon, TailFlag::Truncated)?;
        Ok(bundle
            .with_scalar("U_H", logs[steps].exp())
            .with_scalar("rho_on_horizon", argmax as f64 * grid.dt)
            .with_path("U", coarse))
    })
}

/// Index of the path whose `U_t` is the (lower) median.
fn median_index(values: &[f64]) -> usize {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx[(values.len() - 1) / 2]
}

pub(super) fn check(ens: &Ensemble, params: &RunParams) -> Result<Vec<CheckResult>, ScenarioError> {
    let grid = ens.grid;
    let u_h = ens.scalars("U_H")?;
    let mut checks = Vec::new();
    for (ci, &t) in CHECKPOINTS.iter().enumerate() {
        let u_t = ens.scalars(&format!("U_{t}"))?;
        let ustar_t = ens.scalars(&format!("Ustar_{t}"))?;
        let ret = ens.scalars(&format!("rho_gt_{t}"))?;

        // Pooled: E[1{ρ > t} - U_t/U*_t] = 0, up to the horizon tail U_H/U*_t.
        let diff: Vec<f64> = ret.iter().zip(&u_t).zip(&ustar_t).map(|((r, u), m)| r - u / m).collect();
        let (d, se) = mean_se(&diff);
        let tail: f64 = u_h.iter().zip(&ustar_t).map(|(h, m)| h / m).sum::<f64>() / u_h.len() as f64;
        let tol = (params.k * se).max(tail + 0.005);
        checks.push(CheckResult::near(format!("pooled_rho_gt_t_minus_ratio[t={t}]"), d, se, 0.0, tol));

        let i = median_index(&u_t);
        let state = GbmState { t, u: u_t[i] };
        for (mi, &m) in THRESHOLD_MULTIPLES.iter().enumerate() {
            let model = GbmSupFuture::new(m * u_t[i], grid.dt, grid.horizon);
            let est = nested_conditional(&model, &state, params.n_inner, params.seed, 100 + 10 * ci as u32 + mi as u32);
            let tol = (params.k * est.se).max(est.tail_bound + 0.005);
            checks.push(CheckResult::near(
                format!("sup_after_t_ge_lambda[t={t},lambda={m}*U_t]"),
                est.estimate,
                est.se,
                1.0 / m,
                tol,
            ));
        }
        let model = GbmSupFuture::new(ustar_t[i], grid.dt, grid.horizon);
        let est = nested_conditional(&model, &state, params.n_inner, params.seed, 100 + 10 * ci as u32 + 9);
        let tol = (params.k * est.se).max(est.tail_bound + 0.005);
        checks.push(CheckResult::near(
            format!("z_from_state[t={t}]"),
            est.estimate,
            est.se,
            u_t[i] / ustar_t[i],
            tol,
        ));
    }
    let paths = ens.paths("U")?;
    let report = martingale_test_paths("U", &paths, &MARTINGALE_CHECKPOINTS, &Functional::LIBRARY, params.k)?;
    checks.extend(martingale_checks("U", &report));
    Ok(checks)
}
