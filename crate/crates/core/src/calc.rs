//! Pathwise stochastic calculus on [`CadlagPath`]s.
//!
//! Integrals are left-point sums: the integrand is read just before each
//! instant of the integrator, so a jump of `X` at `t` sees `H(t-)` and a grid
//! increment of `X` over `(s, t]` sees the value `H` had before any event at `t`.
//! For integer-valued step paths integration by parts holds exactly; the
//! `U/U* = 1 + (1/U*_-)·U - (1/U*_-)·U*` identity holds up to the rounding of `(1/m)·m`.

use serde::Serialize;
use thiserror::Error;

use crate::path::{
    path_from_aligned, running_max, values_match, Aligned, CadlagPath, Event, EventKind, PathError,
    TailFlag, MIXED_REL_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalcError {
    #[error("horizons differ: {0} vs {1}")]
    HorizonMismatch(f64, f64),
    #[error("expected initial value {expected}, got {got}")]
    BadInitialValue { expected: f64, got: f64 },
    #[error("path takes negative value {value} at t={time}")]
    NegativeValue { time: f64, value: f64 },
    #[error("running max minus w exceeds 1 at t={time} (gap {gap})")]
    GapExceedsOne { time: f64, gap: f64 },
    #[error("supmultip precondition violated: {0}")]
    Supmultip(SupmultipViolation),
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SupmultipViolation {
    NegativeX { time: f64 },
    MultiplierDecreases { time: f64 },
    MultiplierNotStopped { time: f64 },
    MultiplierOffMaximum { time: f64 },
    JumpConflict { time: f64 },
    NotAtMaximumBeforeStop { time: f64 },
}

impl std::fmt::Display for SupmultipViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NegativeX { time } => write!(f, "X < 0 at t={time}"),
            Self::MultiplierDecreases { time } => write!(f, "v decreases at t={time}"),
            Self::MultiplierNotStopped { time } => write!(f, "v moves after T at t={time}"),
            Self::MultiplierOffMaximum { time } => {
                write!(f, "dv charges {{X- < X*-}} at t={time}")
            }
            Self::JumpConflict { time } => write!(f, "v jumps while X jumps down at t={time}"),
            Self::NotAtMaximumBeforeStop { time } => write!(f, "X(T-) < X*(T-) at T={time}"),
        }
    }
}

fn same_horizon(a: &CadlagPath, b: &CadlagPath) -> Result<(), CalcError> {
    if a.horizon() != b.horizon() {
        return Err(CalcError::HorizonMismatch(a.horizon(), b.horizon()));
    }
    Ok(())
}

fn joint_tail(a: &CadlagPath, b: &CadlagPath) -> TailFlag {
    if a.tail() == TailFlag::Absorbed && b.tail() == TailFlag::Absorbed {
        TailFlag::Absorbed
    } else {
        TailFlag::Truncated
    }
}

/// Continuous (`Grid`/`Drift`) and jump parts of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDecomposition {
    pub continuous_part: CadlagPath,
    pub jump_part: CadlagPath,
}

pub fn decompose(x: &CadlagPath) -> PathDecomposition {
    let (continuous_part, jump_part) = x.split_parts();
    PathDecomposition { continuous_part, jump_part }
}

/// `t ↦ Σ_{s≤t} H(s-)·ΔX(s)` over the instants of `X`.
pub fn integrate_left(h: &CadlagPath, x: &CadlagPath) -> Result<CadlagPath, CalcError> {
    same_horizon(h, x)?;
    let aligned = Aligned::new(&[h, x]);
    let mut acc = 0.0;
    let mut events = Vec::new();
    for k in 0..aligned.len() {
        if let Some(kind) = aligned.event_kind(1, k) {
            acc += aligned.before(0, k) * aligned.increment(1, k);
            events.push(Event::new(aligned.instant(k).time, acc, kind));
        }
    }
    Ok(CadlagPath::new(0.0, events, x.horizon(), joint_tail(h, x))?)
}

/// `[X, Y]`: products of simultaneous jumps plus products of shared grid increments.
pub fn covariation(x: &CadlagPath, y: &CadlagPath) -> Result<CadlagPath, CalcError> {
    same_horizon(x, y)?;
    let aligned = Aligned::new(&[x, y]);
    let mut acc = 0.0;
    let mut events = Vec::new();
    for k in 0..aligned.len() {
        let kind = match (aligned.event_kind(0, k), aligned.event_kind(1, k)) {
            (Some(EventKind::Jump), Some(EventKind::Jump)) => EventKind::Jump,
            (Some(EventKind::Grid), Some(EventKind::Grid)) => EventKind::Grid,
            _ => continue,
        };
        let prod = aligned.increment(0, k) * aligned.increment(1, k);
        if prod != 0.0 {
            acc += prod;
            events.push(Event::new(aligned.instant(k).time, acc, kind));
        }
    }
    Ok(CadlagPath::new(0.0, events, x.horizon(), joint_tail(x, y))?)
}

/// Doléans-Dade exponential `exp(X^c - ½[X^c])·Π(1 + ΔX)`.
///
/// The continuous factor and the product are accumulated in log space. After
/// a jump with `ΔX = -1` the result is absorbed at 0.
pub fn stoch_exp(x: &CadlagPath) -> CadlagPath {
    let mut log_cont = 0.0;
    let mut log_prod = 0.0;
    let mut sign = 1.0;
    let mut events = Vec::with_capacity(x.len());
    let mut tail = x.tail();
    for (e, inc) in x.increments() {
        match e.kind {
            EventKind::Drift => log_cont += inc,
            EventKind::Grid => log_cont += inc - 0.5 * inc * inc,
            EventKind::Jump => {
                let factor = 1.0 + inc;
                if factor == 0.0 {
                    events.push(Event::new(e.time, 0.0, e.kind));
                    tail = TailFlag::Absorbed;
                    break;
                }
                log_prod += factor.abs().ln();
                if factor < 0.0 {
                    sign = -sign;
                }
            }
        }
        events.push(Event::new(e.time, sign * (log_cont + log_prod).exp(), e.kind));
    }
    CadlagPath::new(1.0, events, x.horizon(), tail).expect("events follow a valid path")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioDecomposition {
    pub z: CadlagPath,
    pub running_max: CadlagPath,
    /// `max |U/U* - (1 + (1/U*_-)·U - (1/U*_-)·U*)|`.
    pub residual: f64,
}

pub fn ratio_decomposition(u: &CadlagPath) -> Result<RatioDecomposition, CalcError> {
    if u.initial_value() != 1.0 {
        return Err(CalcError::BadInitialValue { expected: 1.0, got: u.initial_value() });
    }
    if let Some(e) = u.events().iter().find(|e| e.value < 0.0) {
        return Err(CalcError::NegativeValue { time: e.time, value: e.value });
    }
    let ustar = running_max(u);
    let inv = ustar.map_values(|m| 1.0 / m);
    let du = integrate_left(&inv, u)?;
    let dustar = integrate_left(&inv, &ustar)?;
    let aligned = Aligned::new(&[u, &ustar, &du, &dustar]);
    let ratio = |k: usize| aligned.after(0, k) / aligned.after(1, k);
    let z = path_from_aligned(&aligned, 1.0, ratio, u.horizon(), u.tail())?;
    let residual = (0..aligned.len())
        .map(|k| (ratio(k) - (1.0 + aligned.after(2, k) - aligned.after(3, k))).abs())
        .fold(0.0, f64::max);
    Ok(RatioDecomposition { z, running_max: ustar, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GexpOutcome {
    /// `1 + ℰ(γ)_-·w`.
    pub u: CadlagPath,
    pub gamma: CadlagPath,
    pub exp_gamma: CadlagPath,
    pub max_rel_deviation: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// Builds `U = 1 + ℰ(γ)_-·w` with `γ = w* ∨ 0` and checks `U ≥ 0`, `U* = ℰ(γ)`.
///
/// Exact for pure-jump `w`. With continuous parts the left-point integral and
/// the exponential differ at second order, so the tolerance is the summed
/// squares of the continuous increments of `γ`.
pub fn gexp_forward(w: &CadlagPath) -> Result<GexpOutcome, CalcError> {
    if w.initial_value() != 0.0 {
        return Err(CalcError::BadInitialValue { expected: 0.0, got: w.initial_value() });
    }
    let gamma = running_max(w).map_values(|g| g.max(0.0));
    let aligned = Aligned::new(&[w, &gamma]);
    for k in 0..aligned.len() {
        let gap = aligned.after(1, k) - aligned.after(0, k);
        if gap > 1.0 {
            return Err(CalcError::GapExceedsOne { time: aligned.instant(k).time, gap });
        }
    }
    let exp_gamma = stoch_exp(&gamma);
    // Where γ - w = 1 the exact value is 0; the sum leaves rounding residue.
    let floor = -MIXED_REL_TOL * exp_gamma.max_value();
    let u = integrate_left(&exp_gamma, w)?.map_values(|v| {
        let u = 1.0 + v;
        if u < 0.0 && u >= floor {
            0.0
        } else {
            u
        }
    });
    let ustar = running_max(&u);
    let cmp = Aligned::new(&[&ustar, &exp_gamma]);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let max_rel_deviation = (0..cmp.len())
        .map(|k| rel(cmp.after(0, k), cmp.after(1, k)))
        .fold(rel(ustar.initial_value(), exp_gamma.initial_value()), f64::max);
    let second_order: f64 = gamma
        .increments()
        .filter(|(e, _)| e.kind != EventKind::Jump)
        .map(|(_, inc)| inc * inc)
        .sum();
    let tolerance = MIXED_REL_TOL + second_order;
    let ok = u.min_value() >= 0.0 && max_rel_deviation <= tolerance;
    Ok(GexpOutcome { u, gamma, exp_gamma, max_rel_deviation, tolerance, ok })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupmultipOutcome {
    pub y: CadlagPath,
    pub y_running_max: CadlagPath,
    pub max_rel_deviation: f64,
    pub ok: bool,
}

/// `Y = e^v X` together with the check `Y* = e^v X*`.
pub fn supmultip_transform(
    x: &CadlagPath,
    v: &CadlagPath,
    stop: Option<f64>,
) -> Result<SupmultipOutcome, CalcError> {
    use SupmultipViolation as V;
    same_horizon(x, v)?;
    let fail = |violation| Err(CalcError::Supmultip(violation));
    if x.initial_value() < 0.0 {
        return fail(V::NegativeX { time: 0.0 });
    }
    if let Some(e) = x.events().iter().find(|e| e.value < 0.0) {
        return fail(V::NegativeX { time: e.time });
    }
    if let Some((e, _)) = v.increments().find(|&(_, inc)| inc < 0.0) {
        return fail(V::MultiplierDecreases { time: e.time });
    }
    if let Some(t) = stop {
        if let Some(e) = v.events().iter().find(|e| e.time > t) {
            return fail(V::MultiplierNotStopped { time: e.time });
        }
    }
    let xstar = running_max(x);
    let tol = if x.is_jump_only() { 0.0 } else { MIXED_REL_TOL };
    let aligned = Aligned::new(&[x, &xstar, v]);
    for k in 0..aligned.len() {
        let dv = aligned.increment(2, k);
        if dv <= 0.0 {
            continue;
        }
        let time = aligned.instant(k).time;
        if !values_match(aligned.before(0, k), aligned.before(1, k), tol) {
            return fail(V::MultiplierOffMaximum { time });
        }
        let both_jump = aligned.event_kind(0, k) == Some(EventKind::Jump)
            && aligned.event_kind(2, k) == Some(EventKind::Jump);
        if both_jump && aligned.increment(0, k) < 0.0 {
            return fail(V::JumpConflict { time });
        }
    }
    if let Some(t) = stop {
        if !values_match(x.left_limit_at(t), xstar.left_limit_at(t), tol) {
            return fail(V::NotAtMaximumBeforeStop { time: t });
        }
    }

    let scaled = |k: usize, p: usize| aligned.after(2, k).exp() * aligned.after(p, k);
    let y0 = v.initial_value().exp() * x.initial_value();
    let y = path_from_aligned(&aligned, y0, |k| scaled(k, 0), x.horizon(), joint_tail(x, v))?;
    let y_running_max = running_max(&y);
    let mut ymax = y0;
    let mut dev: f64 = 0.0;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    for k in 0..aligned.len() {
        ymax = ymax.max(scaled(k, 0));
        dev = dev.max(rel(ymax, scaled(k, 1)));
    }
    Ok(SupmultipOutcome {
        y,
        y_running_max,
        max_rel_deviation: dev,
        ok: dev <= MIXED_REL_TOL,
    })
}
