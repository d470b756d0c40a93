//! First-jump family: s1, s2, s6, s7.
//!
//! `S` and `S′` are independent `Exp(1)` times rounded up to multiples of
//! `2^-20`; with a power-of-two grid every value of `t∧S`, `t∧S∧S′` and their
//! sums is an exact binary fraction, so the algebra between the processes is
//! exact in floating point.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::{martingale_checks, CheckResult, RunParams, ScenarioError, MARTINGALE_CHECKPOINTS};
use crate::mc::{martingale_test_paths, Ensemble, Functional, Grid, PathBundle};
use crate::path::{
    path_from_aligned, running_max, support_check, Aligned, CadlagPath, Event, EventKind, TailFlag,
};
use crate::representation::{
    compensator_swap_ti, extract_gamma, CheckValue, remove_ti_jump, sde_solve_mmr, verify_mmr, MmrCertificate,
};

const LATTICE: f64 = 1_048_576.0;

/// Rounds up to the `2^-20` lattice (never to 0).
pub fn snap_to_lattice(x: f64) -> f64 {
    ((x * LATTICE).ceil() / LATTICE).max(1.0 / LATTICE)
}

fn exp_time(rng: &mut ChaCha8Rng) -> f64 {
    snap_to_lattice(Exp1.sample(rng))
}

fn tail_for(s: f64, horizon: f64) -> TailFlag {
    if s <= horizon {
        TailFlag::Absorbed
    } else {
        TailFlag::Truncated
    }
}

/// `t∧s` with `Drift` samples at the grid times before `s`, at `extra` when
/// `extra < s`, and at `s` (or at the horizon when `s` lies beyond it).
fn stopped_clock(s: f64, extra: Option<f64>, grid: &Grid) -> Result<CadlagPath, ScenarioError> {
    let h = grid.horizon;
    let mut times = grid.times_before(s.min(h));
    times.extend(extra.filter(|&x| x < s && x <= h));
    times.push(s.min(h));
    times.sort_by(f64::total_cmp);
    times.dedup();
    let events = times.iter().map(|&t| Event::new(t, t.min(s), EventKind::Drift)).collect();
    Ok(CadlagPath::new(0.0, events, h, tail_for(s, h))?)
}

/// `1_{[s,∞)}` scaled by `height`, seen on `[0, horizon]`.
fn jump_at(s: f64, from: f64, to: f64, horizon: f64) -> Result<CadlagPath, ScenarioError> {
    if s <= horizon {
        Ok(CadlagPath::step(from, &[(s, to)], horizon)?)
    } else {
        Ok(CadlagPath::constant(from, horizon).with_tail(TailFlag::Truncated))
    }
}

/// `b - a` on the merged instants.
fn difference(b: &CadlagPath, a: &CadlagPath) -> Result<CadlagPath, ScenarioError> {
    let al = Aligned::new(&[b, a]);
    let tail = if b.tail() == TailFlag::Absorbed && a.tail() == TailFlag::Absorbed {
        TailFlag::Absorbed
    } else {
        TailFlag::Truncated
    };
    Ok(path_from_aligned(
        &al,
        b.initial_value() - a.initial_value(),
        |k| al.after(0, k) - al.after(1, k),
        b.horizon(),
        tail,
    )?)
}

/// `S ~ Exp(1)`; `Z = 1_{[0,S)}`, `A = 1_{[S,∞)}`, `γ = t∧S`, `U = e^{t∧S}1_{[0,S)}`
/// (the solver output). The first draw of each path's stream is `S`, so s1
/// and s2 built with the same seed share `S`.
pub(super) fn build_first_jump(n: usize, seed: u64, grid: Grid) -> Result<Ensemble, ScenarioError> {
    Ensemble::build("s1_first_jump", n, seed, grid, |_, rng| {
        let s = exp_time(rng);
        let h = grid.horizon;
        let z = jump_at(s, 1.0, 0.0, h)?;
        let a = jump_at(s, 0.0, 1.0, h)?;
        let gamma = stopped_clock(s, None, &grid)?;
        let u = sde_solve_mmr(&z, &gamma)?;
        Ok(PathBundle::default()
            .with_scalar("S", s)
            .with_scalar("rho", s)
            .with_path("Z", z)
            .with_path("A", a)
            .with_path("gamma", gamma)
            .with_path("U", u))
    })
}

/// Adds `S′`, the stopped clock `v = t∧S∧S′`,
/// `γ′ = 1_{S′<S}1_{[S′,∞)} + (t∧S - t∧S∧S′)` and `U″` solving with `γ′`.
/// Here `γ = t∧S` also carries a sample at `S′`.
pub(super) fn build_nonunique(
    label: &str,
    n: usize,
    seed: u64,
    grid: Grid,
) -> Result<Ensemble, ScenarioError> {
    Ensemble::build(label, n, seed, grid, |_, rng| {
        let s = exp_time(rng);
        let sp = exp_time(rng);
        let h = grid.horizon;
        let z = jump_at(s, 1.0, 0.0, h)?;
        let a = jump_at(s, 0.0, 1.0, h)?;
        let gamma = stopped_clock(s, Some(sp), &grid)?;
        let v = stopped_clock(s.min(sp), None, &grid)?;
        let first = sp < s && sp <= h;
        let jump = if first {
            CadlagPath::step(0.0, &[(sp, 1.0)], h)?
        } else {
            CadlagPath::constant(0.0, h)
        };
        let al = Aligned::new(&[&gamma, &v, &jump]);
        let gamma_prime = path_from_aligned(
            &al,
            0.0,
            |k| al.after(2, k) + (al.after(0, k) - al.after(1, k)),
            h,
            gamma.tail(),
        )?;
        let u = sde_solve_mmr(&z, &gamma)?;
        let u_alt = sde_solve_mmr(&z, &gamma_prime)?;
        let compensated_jump = difference(&jump, &v)?;
        Ok(PathBundle::default()
            .with_scalar("S", s)
            .with_scalar("S_prime", sp)
            .with_scalar("rho", s)
            .with_scalar("first_jump", f64::from(u8::from(first)))
            .with_path("Z", z)
            .with_path("A", a)
            .with_path("gamma", gamma)
            .with_path("v", v)
            .with_path("jump_minus_v", compensated_jump)
            .with_path("gamma_prime", gamma_prime)
            .with_path("U", u)
            .with_path("U_alt", u_alt))
    })
}

/// `T = S′` on `{S′ < S}` (within the horizon), else `∞`.
fn removal_time(b: &PathBundle) -> Result<Option<f64>, ScenarioError> {
    Ok((b.scalar("first_jump")? == 1.0).then_some(b.scalar("S_prime")?))
}

fn certify(b: &PathBundle, u: &CadlagPath, params: &RunParams) -> Result<MmrCertificate, ScenarioError> {
    Ok(verify_mmr(b.path("Z")?, u, Some(b.path("A")?), params.residual_tol)?)
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn max_rel_gap(x: &CadlagPath, y: &CadlagPath) -> f64 {
    let al = Aligned::new(&[x, y]);
    (0..al.len())
        .map(|k| rel_gap(al.after(0, k), al.after(1, k)))
        .fold(rel_gap(x.initial_value(), y.initial_value()), f64::max)
}

fn differs_somewhere(x: &CadlagPath, y: &CadlagPath) -> bool {
    let al = Aligned::new(&[x, y]);
    x.initial_value() != y.initial_value() || (0..al.len()).any(|k| al.after(0, k) != al.after(1, k))
}

fn martingale_of(
    label: &str,
    paths: &[CadlagPath],
    params: &RunParams,
) -> Result<Vec<CheckResult>, ScenarioError> {
    let refs: Vec<&CadlagPath> = paths.iter().collect();
    let report = martingale_test_paths(label, &refs, &MARTINGALE_CHECKPOINTS, &Functional::LIBRARY, params.k)?;
    Ok(martingale_checks(label, &report))
}

fn minus_a_plus(ens: &Ensemble, gammas: &[CadlagPath]) -> Result<Vec<CadlagPath>, ScenarioError> {
    ens.bundles
        .par_iter()
        .zip(gammas)
        .map(|(b, g)| difference(g, b.path("A")?))
        .collect()
}

fn certificate_checks(prefix: &str, certs: &[MmrCertificate]) -> Vec<CheckResult> {
    let residual = certs.iter().map(|c| c.max_residual).fold(0.0, f64::max);
    let tol = certs.iter().map(|c| c.tolerance).fold(f64::INFINITY, f64::min);
    vec![
        CheckResult::at_most(format!("{prefix}.max_residual"), residual, tol),
        CheckResult::all_of(format!("{prefix}.certificate_valid"), certs.iter().map(|c| c.verdict.is_valid())),
    ]
}

pub(super) fn check_first_jump(ens: &Ensemble, params: &RunParams) -> Result<Vec<CheckResult>, ScenarioError> {
    struct PathOut {
        cert: MmrCertificate,
        escaped: f64,
        bracket_ok: bool,
        star_jump_at_rho: f64,
        round_trip: f64,
    }
    let outs: Vec<PathOut> = ens
        .bundles
        .par_iter()
        .map(|b| {
            let u = b.path("U")?;
            let cert = certify(b, u, params)?;
            let escaped = match cert.checks.get("du_star_escaped_mass") {
                Some(CheckValue::Value(m)) => *m,
                _ => f64::INFINITY,
            };
            let bracket_ok = cert.checks.get("a_u_star_bracket_zero") == Some(&CheckValue::Flag(true));
            let rho = b.scalar("rho")?;
            let star_jump_at_rho = if rho <= u.horizon() { running_max(u).jump_at(rho).abs() } else { 0.0 };
            let again = sde_solve_mmr(b.path("Z")?, &extract_gamma(u)?)?;
            let round_trip = max_rel_gap(&again, u);
            Ok(PathOut { cert, escaped, bracket_ok, star_jump_at_rho, round_trip })
        })
        .collect::<Result<_, ScenarioError>>()?;

    let certs: Vec<MmrCertificate> = outs.iter().map(|o| o.cert.clone()).collect();
    let mut checks = certificate_checks("U", &certs);
    checks.push(CheckResult::at_most(
        "du_star_escaped_mass",
        outs.iter().map(|o| o.escaped).fold(0.0, f64::max),
        0.0,
    ));
    checks.push(CheckResult::all_of("a_u_star_bracket_zero", outs.iter().map(|o| o.bracket_ok)));
    checks.push(CheckResult::at_most(
        "delta_u_star_at_rho",
        outs.iter().map(|o| o.star_jump_at_rho).fold(0.0, f64::max),
        0.0,
    ));
    checks.push(CheckResult::at_most(
        "gamma_round_trip_rel_error",
        outs.iter().map(|o| o.round_trip).fold(0.0, f64::max),
        1e-12,
    ));
    let gammas: Vec<CadlagPath> = ens.bundles.iter().map(|b| b.path("gamma").cloned()).collect::<Result<_, _>>()?;
    checks.extend(martingale_of("-A+gamma", &minus_a_plus(ens, &gammas)?, params)?);
    checks.extend(z_plus_a_checks(ens, params)?);
    Ok(checks)
}

fn z_plus_a_checks(ens: &Ensemble, params: &RunParams) -> Result<Vec<CheckResult>, ScenarioError> {
    let m: Vec<CadlagPath> = ens
        .bundles
        .par_iter()
        .map(|b| {
            let z = b.path("Z")?;
            let a = b.path("A")?;
            let minus_a = a.map_values(|x| -x);
            difference(z, &minus_a)
        })
        .collect::<Result<_, ScenarioError>>()?;
    martingale_of("Z+A", &m, params)
}

pub(super) fn check_nonunique(ens: &Ensemble, params: &RunParams) -> Result<Vec<CheckResult>, ScenarioError> {
    let compensated: Vec<CadlagPath> =
        ens.bundles.iter().map(|b| b.path("jump_minus_v").cloned()).collect::<Result<_, _>>()?;
    let mut checks = martingale_of("jump-v", &compensated, params)?;

    let certs: Vec<(MmrCertificate, MmrCertificate, bool)> = ens
        .bundles
        .par_iter()
        .map(|b| {
            let u = b.path("U")?;
            let u_alt = b.path("U_alt")?;
            Ok((certify(b, u, params)?, certify(b, u_alt, params)?, differs_somewhere(u, u_alt)))
        })
        .collect::<Result<_, ScenarioError>>()?;
    let (canon, alt): (Vec<_>, Vec<_>) = certs.iter().map(|(a, b, _)| (a.clone(), b.clone())).unzip();
    checks.extend(certificate_checks("U", &canon));
    checks.extend(certificate_checks("U_alt", &alt));
    checks.extend(z_plus_a_checks(ens, params)?);

    // U and U″ already differ on (0, S∧S′) on every path: U = e^t there, U″ = 1.
    let differ: Vec<f64> = certs.iter().map(|(_, _, d)| f64::from(u8::from(*d))).collect();
    let (p, se) = crate::mc::mean_se(&differ);
    checks.push(CheckResult::near("p_u_differs_from_u_alt", p, se, 1.0, params.k * se));
    let first = ens.scalars("first_jump")?;
    let (p, se) = crate::mc::mean_se(&first);
    checks.push(CheckResult::near("p_u_alt_has_up_jump", p, se, 0.5, params.k * se));
    let up_jumps: Vec<f64> = ens
        .bundles
        .iter()
        .map(|b| {
            let u = b.path("U_alt")?;
            Ok(f64::from(u8::from(u.increments().any(|(e, inc)| e.kind == EventKind::Jump && inc > 0.0))))
        })
        .collect::<Result<_, ScenarioError>>()?;
    checks.push(CheckResult::all_of(
        "up_jump_iff_s_prime_before_s",
        up_jumps.iter().zip(&first).map(|(a, b)| a == b),
    ));

    let gammas: Vec<CadlagPath> =
        ens.bundles.iter().map(|b| b.path("gamma_prime").cloned()).collect::<Result<_, _>>()?;
    checks.extend(martingale_of("-A+gamma_prime", &minus_a_plus(ens, &gammas)?, params)?);
    Ok(checks)
}

pub(super) fn check_removal(ens: &Ensemble, params: &RunParams) -> Result<Vec<CheckResult>, ScenarioError> {
    let outs: Vec<(CadlagPath, f64, f64, f64)> = ens
        .bundles
        .par_iter()
        .map(|b| {
            let r = remove_ti_jump(b.path("U_alt")?, removal_time(b)?, b.path("v")?)?;
            let err = max_rel_gap(&r.u_prime, b.path("U")?);
            Ok((r.u_prime, err, r.ratio_deviation, r.max_identity_deviation))
        })
        .collect::<Result<_, ScenarioError>>()?;
    let worst = |f: fn(&(CadlagPath, f64, f64, f64)) -> f64| outs.iter().map(f).fold(0.0, f64::max);
    let mut checks = vec![
        CheckResult::at_most("u_prime_vs_u_max_rel_error", worst(|o| o.1), 1e-9),
        CheckResult::at_most("ratio_preserved_max_deviation", worst(|o| o.2), 1e-9),
        CheckResult::at_most("running_max_identity_max_rel_deviation", worst(|o| o.3), 1e-9),
    ];
    let u_primes: Vec<CadlagPath> = outs.into_iter().map(|o| o.0).collect();
    checks.extend(martingale_of("U_prime", &u_primes, params)?);
    Ok(checks)
}

/// `γ̂_c = γ′ - (1_{S′<S}1_{[S′,∞)} - v) + (c·1_{S′<S}1_{[S′,∞)} - c·v)` on one path.
pub(super) fn interpolated_gamma(b: &PathBundle, c: f64) -> Result<CadlagPath, ScenarioError> {
    let v = b.path("v")?;
    Ok(compensator_swap_ti(b.path("gamma_prime")?, removal_time(b)?, c, v, &v.map_values(|x| c * x))?)
}

pub(super) fn check_interpolation(ens: &Ensemble, params: &RunParams) -> Result<Vec<CheckResult>, ScenarioError> {
    let mut checks = Vec::new();
    for c in [0.0, 0.25, 0.5, 1.0] {
        let label = format!("c={c}");
        let outs: Vec<(CadlagPath, MmrCertificate, bool, bool)> = ens
            .bundles
            .par_iter()
            .map(|b| {
                let g = interpolated_gamma(b, c)?;
                let z = b.path("Z")?;
                let u = sde_solve_mmr(z, &g)?;
                let cert = certify(b, &u, params)?;
                let carried = support_check(&g, |i| z.value_at_instant(i) == 1.0).carried;
                let same = if c == 0.0 {
                    &g == b.path("gamma")?
                } else if c == 1.0 {
                    !differs_somewhere(&g, b.path("gamma_prime")?)
                } else {
                    true
                };
                Ok((g, cert, carried, same))
            })
            .collect::<Result<_, ScenarioError>>()?;
        let certs: Vec<MmrCertificate> = outs.iter().map(|o| o.1.clone()).collect();
        checks.extend(certificate_checks(&format!("{label}.U"), &certs));
        checks.push(CheckResult::all_of(
            format!("{label}.d_gamma_hat_on_z_one"),
            outs.iter().map(|o| o.2),
        ));
        if c == 0.0 {
            checks.push(CheckResult::all_of("c=0.gamma_hat_equals_gamma_event_list", outs.iter().map(|o| o.3)));
        }
        if c == 1.0 {
            checks.push(CheckResult::all_of("c=1.gamma_hat_equals_gamma_prime", outs.iter().map(|o| o.3)));
        }
        let gammas: Vec<CadlagPath> = outs.into_iter().map(|o| o.0).collect();
        checks.extend(martingale_of(&format!("-A+gamma_hat[{label}]"), &minus_a_plus(ens, &gammas)?, params)?);
    }
    Ok(checks)
}
