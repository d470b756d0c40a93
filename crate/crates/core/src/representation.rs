//! Building `U` from `(Z, γ)`, recovering `γ` from `U`, certifying `Z = U/U*`,
//! and the two transforms that move between representations.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::calc::{covariation, CalcError};
use crate::mc::MartingaleTestReport;
use crate::path::{
    path_from_aligned, running_max, support_check, values_match, Aligned, CadlagPath, Class, Event,
    EventKind, Instant, PathError, TailFlag, MIXED_REL_TOL,
};

pub const PURE_JUMP_TOL: f64 = 1e-12;
pub const MIXED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReprError {
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("U becomes negative ({value}) at t={time}")]
    NegativeU { time: f64, value: f64 },
    #[error("horizons differ: {0} vs {1}")]
    HorizonMismatch(f64, f64),
    #[error("jump of U at T={time} is {jump}, must be positive")]
    JumpNotPositive { time: f64, jump: f64 },
    #[error("multiplier jumps at T={time}")]
    MultiplierJumps { time: f64 },
    #[error("need 0 ≤ ξ ≤ Δγ(T), got ξ={xi}, Δγ(T)={jump}")]
    XiOutOfRange { xi: f64, jump: f64 },
    #[error("result decreases at t={time}")]
    NotMonotone { time: f64 },
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Path(#[from] PathError),
}

fn check_horizons(paths: &[&CadlagPath]) -> Result<(), ReprError> {
    let h = paths[0].horizon();
    match paths.iter().find(|p| p.horizon() != h) {
        Some(p) => Err(ReprError::HorizonMismatch(h, p.horizon())),
        None => Ok(()),
    }
}

fn tail_of(paths: &[&CadlagPath]) -> TailFlag {
    if paths.iter().all(|p| p.tail() == TailFlag::Absorbed) {
        TailFlag::Absorbed
    } else {
        TailFlag::Truncated
    }
}

fn at_or_after_jump(inst: Instant, t: Option<f64>) -> bool {
    t.is_some_and(|t| inst.cmp_key(&Instant::new(t, Class::Jump)) != Ordering::Less)
}

/// Solves `U = 1 + U*_-·(Z + γ)` on the merged instants of `Z` and `γ`.
///
/// Simultaneous events of `Z` and `γ` enter as one increment `Δ(Z+γ)`. On a
/// continuous instant where `U` sits at its maximum and `Z` does not move, the
/// SDE reads `dU = U dγ` and is solved exactly by `U = U_a·e^{γ - γ_a}`
/// from the last anchor `a`; everywhere else the step is
/// `U_k = U_{k-1} + U*_{k-1}·Δ(Z+γ)_k`.
pub fn sde_solve_mmr(z: &CadlagPath, gamma: &CadlagPath) -> Result<CadlagPath, ReprError> {
    check_horizons(&[z, gamma])?;
    if z.initial_value() != 1.0 {
        return Err(ReprError::BadInput(format!("Z(0) = {}", z.initial_value())));
    }
    if z.min_value() < 0.0 {
        return Err(ReprError::BadInput("Z takes negative values".into()));
    }
    if gamma.initial_value() != 0.0 || !gamma.is_nondecreasing() {
        return Err(ReprError::BadInput("γ must start at 0 and be non-decreasing".into()));
    }
    let aligned = Aligned::new(&[z, gamma]);
    let mut values = Vec::with_capacity(aligned.len());
    let (mut u, mut ustar) = (1.0f64, 1.0f64);
    let mut anchor: Option<(f64, f64)> = None;
    for k in 0..aligned.len() {
        let dz = aligned.increment(0, k);
        let dg = aligned.increment(1, k);
        let inst = aligned.instant(k);
        if inst.class == Class::Continuous && dz == 0.0 && u == ustar {
            let (au, ag) = *anchor.get_or_insert((u, aligned.before(1, k)));
            u = au * (aligned.after(1, k) - ag).exp();
        } else {
            u += ustar * (dz + dg);
            anchor = None;
        }
        if u < 0.0 {
            if u >= -MIXED_REL_TOL * ustar {
                u = 0.0;
            } else {
                return Err(ReprError::NegativeU { time: inst.time, value: u });
            }
        }
        ustar = ustar.max(u);
        values.push(u);
    }
    Ok(path_from_aligned(&aligned, 1.0, |k| values[k], z.horizon(), tail_of(&[z, gamma]))?)
}

/// `γ = (1/U*_-)·U*`: jumps contribute `ΔU*/U*_-`, continuous stretches
/// `ln(U*_k/U*_a)` from the last jump `a` (the exact integral of `dU*/U*` for
/// continuous `U*`, and the inverse of the solver's exponential segments).
pub fn extract_gamma(u: &CadlagPath) -> Result<CadlagPath, ReprError> {
    if u.initial_value() != 1.0 {
        return Err(ReprError::BadInput(format!("U(0) = {}", u.initial_value())));
    }
    if u.min_value() < 0.0 {
        return Err(ReprError::BadInput("U takes negative values".into()));
    }
    let ustar = running_max(u);
    let mut events = Vec::with_capacity(ustar.len());
    let (mut gamma, mut prev) = (0.0, 1.0);
    let (mut anchor_gamma, mut anchor_max) = (0.0, 1.0);
    for e in ustar.events() {
        if e.kind == EventKind::Jump {
            gamma += (e.value - prev) / prev;
            anchor_gamma = gamma;
            anchor_max = e.value;
            events.push(Event::new(e.time, gamma, EventKind::Jump));
        } else {
            gamma = anchor_gamma + (e.value / anchor_max).ln();
            events.push(Event::new(e.time, gamma, EventKind::Drift));
        }
        prev = e.value;
    }
    Ok(CadlagPath::new(0.0, events, u.horizon(), u.tail())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Valid,
    /// Every check passed but the tail is truncated, so vanishing at infinity
    /// is not certified.
    ValidOnHorizon,
    Refuted(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        !matches!(self, Verdict::Refuted(_))
    }

    pub fn label(&self) -> String {
        match self {
            Verdict::Valid => "VALID".into(),
            Verdict::ValidOnHorizon => "VALID_ON_HORIZON".into(),
            Verdict::Refuted(r) => format!("REFUTED({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CheckValue {
    Flag(bool),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmrCertificate {
    pub z: CadlagPath,
    pub gamma: CadlagPath,
    pub u: CadlagPath,
    pub u_star: CadlagPath,
    pub max_residual: f64,
    pub tolerance: f64,
    pub checks: BTreeMap<String, CheckValue>,
    pub verdict: Verdict,
}

impl MmrCertificate {
    /// Folds an ensemble-level martingale test of `-A + γ` into the verdict.
    pub fn with_martingale_report(mut self, report: &MartingaleTestReport) -> Self {
        let ok = report.all_pass();
        self.checks.insert("martingale_minus_a_plus_gamma".into(), CheckValue::Flag(ok));
        if !ok && self.verdict.is_valid() {
            self.verdict = Verdict::Refuted("-A + γ fails the martingale test".into());
        }
        self
    }

    pub fn to_json(&self, scenario: &str, path_id: usize) -> Value {
        let checks: serde_json::Map<String, Value> = self
            .checks
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    CheckValue::Flag(true) => json!("pass"),
                    CheckValue::Flag(false) => json!("fail"),
                    CheckValue::Value(x) => json!(x),
                };
                (k.clone(), v)
            })
            .collect();
        json!({
            "scenario": scenario,
            "path_id": path_id,
            "residual": self.max_residual,
            "checks": checks,
            "verdict": self.verdict.label(),
        })
    }
}

/// Pathwise checks of `Z = U/U*`.
///
/// Residual `max |Z - U/U*|` over all instants; `dU*` carried by `{Z = 1}`;
/// `[A, U*] ≡ 0` when `A` is given; jumps of `[Z, U*]` only where
/// `Z_- < 1 = Z`; `U ≥ 0` with `U(0) = 1`. The default tolerance is `1e-12`
/// for jump-only `Z` and `U`, `1e-9` otherwise. The martingale property of
/// `-A + γ` is an ensemble statement, see [`MmrCertificate::with_martingale_report`].
pub fn verify_mmr(
    z: &CadlagPath,
    u: &CadlagPath,
    a: Option<&CadlagPath>,
    tolerance: Option<f64>,
) -> Result<MmrCertificate, ReprError> {
    check_horizons(&[z, u])?;
    let jump_only = z.is_jump_only() && u.is_jump_only();
    let tol = tolerance.unwrap_or(if jump_only { PURE_JUMP_TOL } else { MIXED_TOL });
    let eq_tol = if jump_only { 0.0 } else { MIXED_REL_TOL };
    let mut checks = BTreeMap::new();
    let mut failures: Vec<&str> = Vec::new();

    let nonneg = u.initial_value() == 1.0 && u.min_value() >= 0.0;
    checks.insert("u_nonnegative_from_one".to_string(), CheckValue::Flag(nonneg));
    if !nonneg {
        failures.push("U must start at 1 and stay non-negative");
    }

    let ustar = running_max(u);
    let aligned = Aligned::new(&[z, u, &ustar]);
    let ratio_gap = |zv: f64, uv: f64, mv: f64| (zv - uv / mv).abs();
    let max_residual = (0..aligned.len())
        .map(|k| ratio_gap(aligned.after(0, k), aligned.after(1, k), aligned.after(2, k)))
        .fold(ratio_gap(z.initial_value(), u.initial_value(), ustar.initial_value()), f64::max);
    checks.insert("residual".to_string(), CheckValue::Value(max_residual));
    if !(max_residual <= tol) {
        failures.push("residual |Z - U/U*| above tolerance");
    }

    let support = support_check(&ustar, |inst| values_match(z.value_at_instant(inst), 1.0, eq_tol));
    checks.insert("du_star_on_z_one".to_string(), CheckValue::Flag(support.carried));
    checks.insert("du_star_escaped_mass".to_string(), CheckValue::Value(support.escaped_mass));
    if !support.carried {
        failures.push("dU* charges {Z < 1}");
    }

    if let Some(a) = a {
        check_horizons(&[z, a])?;
        let bracket = covariation(a, &ustar)?;
        let worst = bracket.events().iter().map(|e| e.value.abs()).fold(0.0, f64::max);
        let ok = worst <= tol;
        checks.insert("a_u_star_bracket_zero".to_string(), CheckValue::Flag(ok));
        if !ok {
            failures.push("[A, U*] does not vanish");
        }
    }

    let zu = covariation(z, &ustar)?;
    let mut last = 0.0;
    let mut placed = true;
    for e in zu.events() {
        if e.kind == EventKind::Jump && e.value != last {
            let ok = z.left_limit_at(e.time) < 1.0 && values_match(z.value_at(e.time), 1.0, eq_tol);
            placed &= ok;
        }
        last = e.value;
    }
    checks.insert("z_u_star_jumps_on_entry".to_string(), CheckValue::Flag(placed));
    if !placed {
        failures.push("[Z, U*] jumps off {Z_- < 1 = Z}");
    }

    let gamma = if nonneg { extract_gamma(u)? } else { CadlagPath::constant(0.0, u.horizon()) };
    let vanishes = u.tail() == TailFlag::Absorbed && u.final_value() == 0.0;
    checks.insert("vanishes_at_infinity".to_string(), CheckValue::Flag(vanishes));
    let verdict = match failures.first() {
        Some(reason) => Verdict::Refuted((*reason).to_string()),
        None if vanishes => Verdict::Valid,
        None => Verdict::ValidOnHorizon,
    };
    Ok(MmrCertificate {
        z: z.clone(),
        gamma,
        u: u.clone(),
        u_star: ustar,
        max_residual,
        tolerance: tol,
        checks,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpRemoval {
    pub u_prime: CadlagPath,
    /// `max |U/U* - U'/U'*|`.
    pub ratio_deviation: f64,
    /// Max relative gap in `U* = e^{-v}(1 + ΔU_T/U_{T-}·1_{[T,∞)})·U'*`.
    pub max_identity_deviation: f64,
}

/// `U' = U·e^v / (1 + U_{T-}^{-1}Δ_T U·1_{[T,∞)})`; `T = None` means `T = ∞`.
pub fn remove_ti_jump(
    u: &CadlagPath,
    t: Option<f64>,
    v: &CadlagPath,
) -> Result<JumpRemoval, ReprError> {
    check_horizons(&[u, v])?;
    let rel_jump = match t {
        Some(t) => {
            let jump = u.jump_at(t);
            let before = u.left_limit_at(t);
            if !(jump > 0.0 && before > 0.0) {
                return Err(ReprError::JumpNotPositive { time: t, jump });
            }
            if v.jump_at(t) != 0.0 {
                return Err(ReprError::MultiplierJumps { time: t });
            }
            jump / before
        }
        None => 0.0,
    };
    let aligned = Aligned::new(&[u, v]);
    let divisor = |inst: Instant| if at_or_after_jump(inst, t) { 1.0 + rel_jump } else { 1.0 };
    let at_zero = if t == Some(0.0) { 1.0 + rel_jump } else { 1.0 };
    let value = |k: usize| {
        aligned.after(0, k) * aligned.after(1, k).exp() / divisor(aligned.instant(k))
    };
    let u0 = u.initial_value() * v.initial_value().exp() / at_zero;
    let u_prime = path_from_aligned(&aligned, u0, value, u.horizon(), tail_of(&[u, v]))?;

    let ustar = running_max(u);
    let upstar = running_max(&u_prime);
    let check = Aligned::new(&[u, &ustar, &u_prime, &upstar, v]);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let mut ratio_deviation: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for k in 0..check.len() {
        let r = check.after(0, k) / check.after(1, k);
        let rp = check.after(2, k) / check.after(3, k);
        ratio_deviation = ratio_deviation.max((r - rp).abs());
        let rebuilt = (-check.after(4, k)).exp() * divisor(check.instant(k)) * check.after(3, k);
        identity = identity.max(rel(check.after(1, k), rebuilt));
    }
    Ok(JumpRemoval { u_prime, ratio_deviation, max_identity_deviation: identity })
}

/// `γ̂ = γ - (Δ_Tγ·1_{[T,∞)} - v) + (ξ·1_{[T,∞)} - v')`; `T = None` means `T = ∞`.
pub fn compensator_swap_ti(
    gamma: &CadlagPath,
    t: Option<f64>,
    xi: f64,
    v: &CadlagPath,
    v_prime: &CadlagPath,
) -> Result<CadlagPath, ReprError> {
    check_horizons(&[gamma, v, v_prime])?;
    let (jump, xi) = match t {
        Some(t) => {
            let jump = gamma.jump_at(t);
            if !(jump > 0.0) {
                return Err(ReprError::JumpNotPositive { time: t, jump });
            }
            if !(0.0..=jump).contains(&xi) {
                return Err(ReprError::XiOutOfRange { xi, jump });
            }
            (jump, xi)
        }
        None => (0.0, 0.0),
    };
    let aligned = Aligned::new(&[gamma, v, v_prime]);
    let ind = |inst: Instant| if at_or_after_jump(inst, t) { 1.0 } else { 0.0 };
    let value = |k: usize| {
        let i = ind(aligned.instant(k));
        ((aligned.after(0, k) - jump * i) + aligned.after(1, k)) + (xi * i - aligned.after(2, k))
    };
    let g0 = (gamma.initial_value() + v.initial_value()) - v_prime.initial_value();
    let out = path_from_aligned(&aligned, g0, value, gamma.horizon(), tail_of(&[gamma, v, v_prime]))?;
    if let Some((e, _)) = out.increments().find(|&(_, inc)| inc < 0.0) {
        return Err(ReprError::NotMonotone { time: e.time });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = 8.0;

    fn grid_before(t: f64, dt: f64) -> Vec<f64> {
        (1..).map(|k| k as f64 * dt).take_while(|&s| s < t).collect()
    }

    fn drift(times: &[f64], f: impl Fn(f64) -> f64) -> CadlagPath {
        let events = times.iter().map(|&t| Event::new(t, f(t), EventKind::Drift)).collect();
        CadlagPath::new(f(0.0), events, H, TailFlag::Absorbed).unwrap()
    }

    /// `t∧S` sampled on the grid, at `extra` and at `S`.
    fn stopped_clock(s: f64, extra: Option<f64>) -> CadlagPath {
        let mut times = grid_before(s, 0.25);
        times.extend(extra.filter(|&x| x < s));
        times.push(s);
        times.sort_by(f64::total_cmp);
        times.dedup();
        drift(&times, |t| t.min(s))
    }

    fn first_jump_z(s: f64) -> CadlagPath {
        CadlagPath::step(1.0, &[(s, 0.0)], H).unwrap()
    }

    #[test]
    fn trivial_inputs() {
        let z = CadlagPath::constant(1.0, H);
        let g = CadlagPath::constant(0.0, H);
        let u = sde_solve_mmr(&z, &g).unwrap();
        assert!(u.is_empty() && u.initial_value() == 1.0);
        assert!(extract_gamma(&u).unwrap().is_empty());
    }

    #[test]
    fn first_jump_solution_is_exponential() {
        let s = 1.625;
        let u = sde_solve_mmr(&first_jump_z(s), &stopped_clock(s, None)).unwrap();
        for t in [0.25, 1.0, 1.5] {
            assert!((u.value_at(t) - t.exp()).abs() <= 1e-15 * t.exp());
        }
        assert_eq!(u.left_limit_at(s), s.exp());
        assert_eq!(u.value_at(s), 0.0);
        let cert = verify_mmr(&first_jump_z(s), &u, Some(&CadlagPath::step(0.0, &[(s, 1.0)], H).unwrap()), None)
            .unwrap();
        assert_eq!(cert.max_residual, 0.0);
        assert_eq!(cert.verdict, Verdict::Valid);
    }

    #[test]
    fn gamma_round_trip() {
        let s = 2.375;
        let g = stopped_clock(s, None);
        let z = first_jump_z(s);
        let u = sde_solve_mmr(&z, &g).unwrap();
        let back = extract_gamma(&u).unwrap();
        for (a, b) in back.events().iter().zip(g.events()) {
            assert_eq!(a.time, b.time);
            assert!((a.value - b.value).abs() <= 1e-12 * b.value.max(1.0));
        }
        let again = sde_solve_mmr(&z, &back).unwrap();
        let al = Aligned::new(&[&u, &again]);
        for k in 0..al.len() {
            let (x, y) = (al.after(0, k), al.after(1, k));
            assert!((x - y).abs() <= 1e-12 * x.max(y).max(1.0));
        }
    }

    #[test]
    fn simultaneous_events_are_combined() {
        let z = CadlagPath::step(1.0, &[(1.0, 0.5), (2.0, 0.0)], H).unwrap();
        let g = CadlagPath::step(0.0, &[(1.0, 0.5)], H).unwrap();
        let u = sde_solve_mmr(&z, &g).unwrap();
        assert_eq!(u.value_at(1.0), 1.0);
        assert_eq!(u.value_at(2.0), 0.5);
    }

    #[test]
    fn negative_u_is_an_error() {
        let z = CadlagPath::step(1.0, &[(1.0, 2.0), (2.0, 0.0)], H).unwrap();
        let g = CadlagPath::constant(0.0, H);
        assert!(matches!(sde_solve_mmr(&z, &g), Err(ReprError::NegativeU { .. })));
        let short = CadlagPath::constant(0.0, 1.0);
        assert!(matches!(sde_solve_mmr(&z, &short), Err(ReprError::HorizonMismatch(..))));
    }

    #[test]
    fn nonunique_solution_segments() {
        let (s, sp) = (2.5, 1.125);
        let z = first_jump_z(s);
        let v = stopped_clock(sp, None);
        let clock = stopped_clock(s, Some(sp));
        let jump = CadlagPath::step(0.0, &[(sp, 1.0)], H).unwrap();
        let al2 = Aligned::new(&[&clock, &v, &jump]);
        let gp = path_from_aligned(
            &al2,
            0.0,
            |k| al2.after(2, k) + (al2.after(0, k) - al2.after(1, k)),
            H,
            TailFlag::Absorbed,
        )
        .unwrap();
        let u2 = sde_solve_mmr(&z, &gp).unwrap();
        assert_eq!(u2.value_at(1.0), 1.0);
        assert_eq!(u2.value_at(sp), 2.0);
        assert!((u2.value_at(2.0) - 2.0 * (2.0 - sp).exp()).abs() < 1e-14);
        assert_eq!(u2.value_at(s), 0.0);

        let back = extract_gamma(&u2).unwrap();
        assert_eq!(back.jump_at(sp), 1.0);
        assert!((back.value_at(2.0) - gp.value_at(2.0)).abs() < 1e-14);

        let removed = remove_ti_jump(&u2, Some(sp), &v).unwrap();
        let u1 = sde_solve_mmr(&z, &clock).unwrap();
        let cmp = Aligned::new(&[&removed.u_prime, &u1]);
        for k in 0..cmp.len() {
            let (x, y) = (cmp.after(0, k), cmp.after(1, k));
            assert!((x - y).abs() <= 1e-12 * x.max(y).max(1.0), "{k}: {x} {y}");
        }
        assert!(removed.ratio_deviation <= 1e-12);
        assert!(removed.max_identity_deviation <= 1e-12);

        let zero = CadlagPath::constant(0.0, H);
        let g0 = compensator_swap_ti(&gp, Some(sp), 0.0, &v, &zero).unwrap();
        assert_eq!(g0, clock);
        let same = compensator_swap_ti(&gp, Some(sp), 1.0, &v, &v).unwrap();
        let cmp = Aligned::new(&[&same, &gp]);
        assert!((0..cmp.len()).all(|k| cmp.after(0, k) == cmp.after(1, k)));
        let half = compensator_swap_ti(&gp, Some(sp), 0.5, &v, &v.map_values(|x| 0.5 * x)).unwrap();
        assert_eq!(half.jump_at(sp), 0.5);
        let cert = verify_mmr(&z, &sde_solve_mmr(&z, &half).unwrap(), None, None).unwrap();
        assert_eq!(cert.verdict, Verdict::Valid);
    }

    #[test]
    fn transform_preconditions() {
        let u = CadlagPath::step(1.0, &[(2.0, 0.0)], H).unwrap();
        let v = CadlagPath::constant(0.0, H);
        assert!(matches!(remove_ti_jump(&u, Some(1.0), &v), Err(ReprError::JumpNotPositive { .. })));
        let frozen = drift(&[0.5, 1.0], |t| t.min(1.0));
        let r = remove_ti_jump(&u, None, &frozen).unwrap();
        assert_eq!(r.u_prime.value_at(1.5), 1.0f64.exp());
        let g = CadlagPath::step(0.0, &[(1.0, 1.0)], H).unwrap();
        assert!(matches!(
            compensator_swap_ti(&g, Some(1.0), 2.0, &v, &v),
            Err(ReprError::XiOutOfRange { .. })
        ));
        let big_v = CadlagPath::step(0.0, &[(0.5, 3.0)], H).unwrap();
        assert!(matches!(
            compensator_swap_ti(&g, Some(1.0), 0.0, &v, &big_v),
            Err(ReprError::NotMonotone { .. })
        ));
    }

    #[test]
    fn u_equal_to_decreasing_z_is_refuted_by_the_martingale_check() {
        use crate::mc::{martingale_test_paths, Functional};
        let z = CadlagPath::step(1.0, &[(1.0, 0.5), (2.0, 0.0)], H).unwrap();
        let cert = verify_mmr(&z, &z, None, None).unwrap();
        assert_eq!(cert.max_residual, 0.0);
        assert!(cert.verdict.is_valid());
        assert!(cert.gamma.is_empty());
        // Deterministic filtration: A = 1 - Z, and -A + γ = Z - 1 is not a martingale.
        let minus_a = z.map_values(|x| x - 1.0);
        let paths = vec![&minus_a; 10];
        let report = martingale_test_paths("-A+γ", &paths, &[(0.0, 1.5)], &[Functional::One], 3.0).unwrap();
        let cert = cert.with_martingale_report(&report);
        assert!(matches!(cert.verdict, Verdict::Refuted(_)));
    }

    #[test]
    fn certificate_json_shape() {
        let z = first_jump_z(1.0);
        let cert = verify_mmr(&z, &z, None, None).unwrap();
        let j = cert.to_json("demo", 3);
        assert_eq!(j["path_id"], 3);
        assert_eq!(j["checks"]["du_star_on_z_one"], "pass");
        assert_eq!(j["verdict"], "VALID");
    }
}
