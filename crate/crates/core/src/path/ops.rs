use serde::Serialize;

use super::{values_match, Aligned, CadlagPath, Event, Instant, MIXED_REL_TOL};

/// `t ↦ sup_{s≤t} path(s)`. Output events are the input events that set a new maximum.
pub fn running_max(path: &CadlagPath) -> CadlagPath {
    let mut max = path.initial_value();
    let mut events = Vec::new();
    for e in path.events() {
        if e.value > max {
            max = e.value;
            events.push(*e);
        }
    }
    CadlagPath::new(path.initial_value(), events, path.horizon(), path.tail())
        .expect("subsequence of a valid path")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportReport {
    pub carried: bool,
    pub escaped_mass: f64,
    pub total_mass: f64,
}

/// Does the measure `d(increasing)` live on `carrier`?
///
/// Jump-only inputs are judged exactly; otherwise escaped mass up to
/// `1e-12 × total mass` is tolerated.
pub fn support_check(increasing: &CadlagPath, carrier: impl Fn(Instant) -> bool) -> SupportReport {
    let mut escaped = 0.0;
    let mut total = 0.0;
    for (e, inc) in increasing.increments() {
        total += inc.abs();
        if inc != 0.0 && !carrier(e.instant()) {
            escaped += inc.abs();
        }
    }
    let tol = if increasing.is_jump_only() { 0.0 } else { MIXED_REL_TOL * total };
    SupportReport { carried: escaped <= tol, escaped_mass: escaped, total_mass: total }
}

/// Carrier `{u = u*}` evaluated at instants.
pub fn on_running_max(u: &CadlagPath) -> impl Fn(Instant) -> bool {
    let ustar = running_max(u);
    let u = u.clone();
    let tol = if u.is_jump_only() { 0.0 } else { MIXED_REL_TOL };
    move |inst| values_match(u.value_at_instant(inst), ustar.value_at_instant(inst), tol)
}

/// Solution `Y = (−X)* ∨ 0` of the reflection problem.
pub fn skorokhod_solve(x: &CadlagPath) -> CadlagPath {
    let mut y = (-x.initial_value()).max(0.0);
    let initial = y;
    let mut events = Vec::new();
    for e in x.events() {
        if -e.value > y {
            y = -e.value;
            events.push(Event::new(e.time, y, e.kind));
        }
    }
    CadlagPath::new(initial, events, x.horizon(), x.tail()).expect("subsequence of a valid path")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkorokhodReport {
    pub nondecreasing: bool,
    pub nonnegative_sum: bool,
    pub escaped_mass: f64,
    pub pass: bool,
}

/// Checks the three reflection conditions for `(X, Y)`. `Y` starts from 0 at
/// time 0-, so a positive `Y(0)` is an atom that must sit on `{X + Y = 0}`.
pub fn verify_skorokhod(x: &CadlagPath, y: &CadlagPath) -> SkorokhodReport {
    let exact = x.is_jump_only() && y.is_jump_only();
    let scale = x.max_value().abs().max(x.min_value().abs()).max(1.0);
    let tol = if exact { 0.0 } else { MIXED_REL_TOL * scale };

    let nondecreasing = y.initial_value() >= 0.0 && y.is_nondecreasing();
    let aligned = Aligned::new(&[x, y]);
    let mut nonnegative_sum = x.initial_value() + y.initial_value() >= -tol;
    let mut escaped = 0.0;
    if y.initial_value() > 0.0 && x.initial_value() + y.initial_value() > tol {
        escaped += y.initial_value();
    }
    for k in 0..aligned.len() {
        let sum = aligned.after(0, k) + aligned.after(1, k);
        if sum < -tol {
            nonnegative_sum = false;
        }
        let dy = aligned.increment(1, k);
        if dy != 0.0 && sum > tol {
            escaped += dy.abs();
        }
    }
    let mass_tol = if exact { 0.0 } else { MIXED_REL_TOL * y.max_value().abs().max(1.0) };
    SkorokhodReport {
        nondecreasing,
        nonnegative_sum,
        escaped_mass: escaped,
        pass: nondecreasing && nonnegative_sum && escaped <= mass_tol,
    }
}
