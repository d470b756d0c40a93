//! s3: `W = ℰ(N - t) = 2^{N_t}e^{-t}` with `N` unit Poisson and
//! `ρ = sup{W = W*}`.
//!
//! At a point of `C = {W = W*}` the future only depends on the ratio
//! `W/W* = 1`, and `Z = P[t < ρ | F_t]` is the probability `q` that the walk
//! `N_u ln 2 - u` climbs back above 0. That is the zero-capital ruin
//! probability of a Cramér-Lundberg model with premium rate 1, claim rate 1
//! and claim size `ln 2`, so `q = ln 2`. Since `q < 1`, `Z` stays below 1 on
//! `(0, ∞)` while `Z̃ = 1` on `C`, and `A` has atoms `1 - q` at the points
//! of `C`.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use super::{CheckResult, RunParams, ScenarioError};
use crate::mc::{
    mean_se, nested_conditional, poisson_arrivals, Ensemble, Grid, PathBundle, RatioState,
    RatioWalkFuture,
};
use crate::path::{on_running_max, running_max, support_check, CadlagPath, ClosedTimeSet, Event, EventKind, TailFlag};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Entrance times probed with nested estimates.
const ENTRANCE_PROBES: usize = 5;
const ENTRANCE_INNER: usize = 2_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioWalkPath {
    /// `W` with a `Drift` sample at each arrival (the left limit), the `Jump`
    /// after it, and a final sample at the horizon.
    pub w: CadlagPath,
    /// Points of `C = {W = W*}` in `[0, horizon]`, starting with 0.
    pub records: Vec<f64>,
    /// Time spent in `{2W_- ≥ W*_-}`, where an arrival would make a new record.
    pub near_max_time: f64,
    /// `(start, length)` of each stretch of that set.
    pub near_max_stretches: Vec<(f64, f64)>,
}

/// Builds `W` from Poisson arrival times. Between arrivals `log W` falls at
/// unit speed, so maxima are only attained at 0 and at arrivals.
pub fn ratio_walk(arrivals: &[f64], horizon: f64) -> Result<RatioWalkPath, ScenarioError> {
    let mut events = Vec::with_capacity(2 * arrivals.len() + 1);
    let mut records = vec![0.0];
    let mut best = 0.0f64;
    let mut stretches = Vec::new();
    let mut near = 0.0;
    let mut level = 0.0;
    let mut start = 0.0;
    for (j, &t) in arrivals.iter().chain(std::iter::once(&horizon)).enumerate() {
        let len = (level - best + LN_2).clamp(0.0, t - start);
        if len > 0.0 {
            stretches.push((start, len));
            near += len;
        }
        let n_before = j as f64;
        if t > start || j == 0 {
            events.push(Event::new(t, (n_before * LN_2 - t).exp(), EventKind::Drift));
        }
        if j == arrivals.len() {
            break;
        }
        level = (n_before + 1.0) * LN_2 - t;
        events.push(Event::new(t, level.exp(), EventKind::Jump));
        if level > best {
            best = level;
            records.push(t);
        }
        start = t;
    }
    let w = CadlagPath::new(1.0, events, horizon, TailFlag::Truncated)?;
    Ok(RatioWalkPath { w, records, near_max_time: near, near_max_stretches: stretches })
}

/// Is `C`, read off `W` with the path-level carrier `{W = W*}`, the finite
/// record set with every point isolated on the right?
fn shadow_is_finite_and_right_isolated(walk: &RatioWalkPath) -> bool {
    let w = &walk.w;
    let on_max = on_running_max(w);
    let mut points = vec![0.0];
    points.extend(w.events().iter().filter(|e| e.time > 0.0 && on_max(e.instant())).map(|e| e.time));
    if points != walk.records {
        return false;
    }
    let Ok(set) = ClosedTimeSet::from_points(&points, w.horizon()) else {
        return false;
    };
    if !set.is_finite_set() || set.right_isolated_points().len() != points.len() {
        return false;
    }
    let wstar = running_max(w);
    points.iter().all(|&p| {
        let next = w.events().iter().find(|e| e.time > p).map_or(w.horizon(), |e| e.time);
        next > p && w.left_limit_at(next) < wstar.value_at(p)
    })
}

pub(super) fn build(n: usize, seed: u64, grid: Grid) -> Result<Ensemble, ScenarioError> {
    Ensemble::build("s3_counterexample", n, seed, grid, |_, rng| {
        let h = grid.horizon;
        let arrivals = poisson_arrivals(1.0, h, rng)?;
        let walk = ratio_walk(&arrivals, h)?;
        let isolated = shadow_is_finite_and_right_isolated(&walk);
        let counting = CadlagPath::new(
            0.0,
            arrivals.iter().enumerate().map(|(i, &t)| Event::new(t, (i + 1) as f64, EventKind::Jump)).collect(),
            h,
            TailFlag::Truncated,
        )?;
        let mut bundle = PathBundle::default()
            .with_path("N", counting)
            .with_scalar("rho_on_horizon", *walk.records.last().expect("0 is a record"))
            .with_scalar("n_records", walk.records.len() as f64)
            .with_scalar("first_entrance", walk.records.get(1).copied().unwrap_or(f64::NAN))
            .with_scalar("c_finite_right_isolated", f64::from(u8::from(isolated)))
            .with_scalar("near_max_time", walk.near_max_time);
        let mut stretches = Vec::new();
        let mut acc = 0.0;
        for &(a, len) in &walk.near_max_stretches {
            acc += len;
            stretches.push(Event::new(a, acc - len, EventKind::Drift));
            stretches.push(Event::new(a + len, acc, EventKind::Drift));
        }
        stretches.dedup_by(|b, a| a.time == b.time);
        let clock = CadlagPath::new(0.0, stretches, h, TailFlag::Truncated)?;
        bundle = bundle.with_path("near_max_clock", clock).with_path("W", walk.w);
        Ok(bundle)
    })
}

pub(super) fn check(ens: &Ensemble, params: &RunParams) -> Result<Vec<CheckResult>, ScenarioError> {
    let model = RatioWalkFuture::default();
    let at_max = RatioState { log_ratio: 0.0 };
    let q = nested_conditional(&model, &at_max, params.n_inner, params.seed, 1);
    let (lo, hi) = q.ci(Z95);
    let mut checks = vec![
        CheckResult::flag("q_hat_ci95_inside_unit_interval", q.estimate, q.se, lo > 0.0 && hi < 1.0),
        CheckResult::near("q_hat_vs_ln2", q.estimate, q.se, LN_2, params.k * q.se + q.tail_bound),
        CheckResult::at_most("q_hat_truncation_tail", q.tail_bound, 1e-3),
    ];

    let isolated = ens.scalars("c_finite_right_isolated")?;
    checks.push(CheckResult::all_of("c_finite_right_isolated", isolated.iter().map(|&x| x == 1.0)));

    let probes: Vec<(usize, f64)> = ens
        .scalars("first_entrance")?
        .into_iter()
        .enumerate()
        .filter(|(_, t)| t.is_finite())
        .take(ENTRANCE_PROBES)
        .collect();
    for (j, &(i, t)) in probes.iter().enumerate() {
        let z = nested_conditional(&model, &at_max, ENTRANCE_INNER, params.seed, 10 + j as u32);
        let (_, hi) = z.ci(Z95);
        checks.push(CheckResult::flag(format!("z_at_entrance[path={i},t={t:.6}].ci95_below_one"), z.estimate, z.se, hi < 1.0));
        checks.push(CheckResult::flag(
            format!("delta_a_at_entrance[path={i},t={t:.6}].positive"),
            1.0 - z.estimate,
            z.se,
            1.0 - hi > 0.0,
        ));
    }
    for (j, r) in [0.5f64, 0.75].into_iter().enumerate() {
        let z = nested_conditional(&model, &RatioState { log_ratio: r.ln() }, ENTRANCE_INNER, params.seed, 20 + j as u32);
        let (_, hi) = z.ci(Z95);
        checks.push(CheckResult::flag(format!("z_at_ratio[{r}].ci95_below_one"), z.estimate, z.se, hi < 1.0));
    }

    // The candidate γ = a = (1 - q)·∫ 1{2W_- ≥ W*_-} dt charges only states
    // with ratio in [1/2, 1]. Z is increasing in the ratio, so Z ≤ q there and
    // {Z = 1} is not reached whenever the upper confidence bound of q is < 1.
    let z_reaches_one = hi >= 1.0;
    let escaped: Vec<f64> = ens
        .bundles
        .par_iter()
        .map(|b| {
            let gamma = b.path("near_max_clock")?.map_values(|x| (1.0 - q.estimate) * x);
            Ok(support_check(&gamma, |_| z_reaches_one).escaped_mass)
        })
        .collect::<Result<_, ScenarioError>>()?;
    let (mean, se) = mean_se(&escaped);
    let min = escaped.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(CheckResult::flag("candidate_gamma_a_escapes_z_one", mean, se, min > 0.0));
    checks.push(
        CheckResult::flag("candidate_gamma_a_certificate_valid", mean, se, min == 0.0).expecting(false),
    );
    Ok(checks)
}
