//! Right-continuous piecewise-constant paths.
//!
//! A [`CadlagPath`] is an initial value plus an ordered list of events. Each
//! event sets a new value at its time and carries a [`EventKind`]:
//!
//! * `Jump` is a genuine discontinuity,
//! * `Grid` is a diffusion increment accumulated since the previous event
//!   (it contributes to the quadratic variation),
//! * `Drift` is a finite-variation continuous increment (zero bracket).
//!
//! Continuous increments happen "before" a jump at the same time: at a single
//! time a path may carry at most one continuous event followed by at most one
//! jump. The pair `(time, class)` is an [`Instant`]; instants of a path are
//! strictly increasing.

mod csv_io;
mod ops;
mod timeset;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{read_csv, write_csv};
pub use ops::{
    on_running_max, running_max, skorokhod_solve, support_check, verify_skorokhod, SkorokhodReport,
    SupportReport,
};
pub use timeset::{ClosedTimeSet, SojournTimes};

/// Relative tolerance for value comparisons on paths with continuous parts.
pub const MIXED_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("event {index} at t={time} is out of order")]
    Unordered { index: usize, time: f64 },
    #[error("event time {time} outside [0, {horizon}]")]
    OutsideHorizon { time: f64, horizon: f64 },
    #[error("non-finite value at t={time}")]
    NonFinite { time: f64 },
    #[error("horizon must be finite and non-negative, got {0}")]
    BadHorizon(f64),
    #[error("time set components overlap or are unsorted near t={0}")]
    BadTimeSet(f64),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventKind {
    Drift,
    Grid,
    Jump,
}

impl EventKind {
    pub fn class(self) -> Class {
        match self {
            EventKind::Jump => Class::Jump,
            EventKind::Grid | EventKind::Drift => Class::Continuous,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Drift => "DRIFT",
            EventKind::Grid => "GRID",
            EventKind::Jump => "JUMP",
        }
    }
}

/// Sub-ordering of events sharing a time: continuous increments first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Continuous,
    Jump,
}

/// What happens after the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TailFlag {
    /// The final value persists forever.
    Absorbed,
    /// Nothing is known past the horizon.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instant {
    pub time: f64,
    pub class: Class,
}

impl Instant {
    pub fn new(time: f64, class: Class) -> Self {
        Self { time, class }
    }

    pub fn cmp_key(&self, other: &Instant) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.class.cmp(&other.class))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub value: f64,
    pub kind: EventKind,
}

impl Event {
    pub fn new(time: f64, value: f64, kind: EventKind) -> Self {
        Self { time, value, kind }
    }

    pub fn instant(&self) -> Instant {
        Instant::new(self.time, self.kind.class())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CadlagPath {
    initial_value: f64,
    events: Vec<Event>,
    horizon: f64,
    tail: TailFlag,
}

impl CadlagPath {
    pub fn new(
        initial_value: f64,
        events: Vec<Event>,
        horizon: f64,
        tail: TailFlag,
    ) -> Result<Self, PathError> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(PathError::BadHorizon(horizon));
        }
        if !initial_value.is_finite() {
            return Err(PathError::NonFinite { time: 0.0 });
        }
        for (i, e) in events.iter().enumerate() {
            if !(e.time >= 0.0 && e.time <= horizon) {
                return Err(PathError::OutsideHorizon { time: e.time, horizon });
            }
            if !e.value.is_finite() {
                return Err(PathError::NonFinite { time: e.time });
            }
            if i > 0 && events[i - 1].instant().cmp_key(&e.instant()) != Ordering::Less {
                return Err(PathError::Unordered { index: i, time: e.time });
            }
        }
        Ok(Self { initial_value, events, horizon, tail })
    }

    pub fn constant(value: f64, horizon: f64) -> Self {
        Self::new(value, Vec::new(), horizon, TailFlag::Absorbed).expect("valid constant path")
    }

    /// Pure-jump path from `(time, new_value)` pairs.
    pub fn step(initial_value: f64, steps: &[(f64, f64)], horizon: f64) -> Result<Self, PathError> {
        let events = steps
            .iter()
            .map(|&(t, v)| Event::new(t, v, EventKind::Jump))
            .collect();
        Self::new(initial_value, events, horizon, TailFlag::Absorbed)
    }

    /// Continuous path sampled at `times` (strictly increasing, all > 0).
    pub fn sampled(
        f: impl Fn(f64) -> f64,
        times: &[f64],
        kind: EventKind,
        horizon: f64,
        tail: TailFlag,
    ) -> Result<Self, PathError> {
        let events = times.iter().map(|&t| Event::new(t, f(t), kind)).collect();
        Self::new(f(0.0), events, horizon, tail)
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tail(&self) -> TailFlag {
        self.tail
    }

    pub fn with_tail(mut self, tail: TailFlag) -> Self {
        self.tail = tail;
        self
    }

    pub fn final_value(&self) -> f64 {
        self.events.last().map_or(self.initial_value, |e| e.value)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_jump_only(&self) -> bool {
        self.events.iter().all(|e| e.kind == EventKind::Jump)
    }

    pub fn has_grid(&self) -> bool {
        self.events.iter().any(|e| e.kind == EventKind::Grid)
    }

    /// Value after every event at or before `instant`.
    pub fn value_at_instant(&self, instant: Instant) -> f64 {
        let idx = self
            .events
            .partition_point(|e| e.instant().cmp_key(&instant) != Ordering::Greater);
        if idx == 0 {
            self.initial_value
        } else {
            self.events[idx - 1].value
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.value_at_instant(Instant::new(t, Class::Jump))
    }

    /// Value just before the jump at `t` (continuous movement up to `t` included).
    pub fn left_limit_at(&self, t: f64) -> f64 {
        self.value_at_instant(Instant::new(t, Class::Continuous))
    }

    /// Value before every event at `t`; the left-point integrand of an Itô sum.
    pub fn pre_value(&self, t: f64) -> f64 {
        let idx = self.events.partition_point(|e| e.time < t);
        if idx == 0 {
            self.initial_value
        } else {
            self.events[idx - 1].value
        }
    }

    pub fn jump_at(&self, t: f64) -> f64 {
        self.value_at(t) - self.left_limit_at(t)
    }

    /// `(event, increment)` pairs in order.
    pub fn increments(&self) -> impl Iterator<Item = (&Event, f64)> + '_ {
        let mut prev = self.initial_value;
        self.events.iter().map(move |e| {
            let inc = e.value - prev;
            prev = e.value;
            (e, inc)
        })
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.increments().all(|(_, inc)| inc >= 0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.events
            .iter()
            .fold(self.initial_value, |m, e| m.min(e.value))
    }

    pub fn max_value(&self) -> f64 {
        self.events
            .iter()
            .fold(self.initial_value, |m, e| m.max(e.value))
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            initial_value: f(self.initial_value),
            events: self
                .events
                .iter()
                .map(|e| Event::new(e.time, f(e.value), e.kind))
                .collect(),
            horizon: self.horizon,
            tail: self.tail,
        }
    }

    /// Drops events whose increment is exactly zero.
    pub fn compact(&self) -> Self {
        let mut prev = self.initial_value;
        let events = self
            .events
            .iter()
            .filter(|e| {
                let keep = e.value != prev;
                prev = e.value;
                keep
            })
            .copied()
            .collect();
        Self { events, ..self.clone() }
    }

    /// Continuous and jump parts; the continuous part starts at the initial value.
    pub fn split_parts(&self) -> (Self, Self) {
        let mut cont = Vec::new();
        let mut jumps = Vec::new();
        let (mut c, mut j) = (self.initial_value, 0.0);
        for (e, inc) in self.increments() {
            if e.kind == EventKind::Jump {
                j += inc;
                jumps.push(Event::new(e.time, j, EventKind::Jump));
            } else {
                c += inc;
                cont.push(Event::new(e.time, c, e.kind));
            }
        }
        let cont = Self { initial_value: self.initial_value, events: cont, ..self.clone() };
        let jumps = Self { initial_value: 0.0, events: jumps, ..self.clone() };
        (cont, jumps)
    }

    /// Path restricted to events at or before `t`, with horizon `t`.
    pub fn stopped_at(&self, t: f64) -> Self {
        let events = self.events.iter().filter(|e| e.time <= t).copied().collect();
        Self {
            initial_value: self.initial_value,
            events,
            horizon: t.min(self.horizon).max(0.0),
            tail: TailFlag::Truncated,
        }
    }
}

/// Several paths swept over the union of their instants.
///
/// `after(p, k)` is the value of path `p` once every event up to and including
/// instant `k` has been applied; `before(p, k)` the value just before `k`.
#[derive(Debug, Clone)]
pub struct Aligned {
    instants: Vec<Instant>,
    kinds: Vec<EventKind>,
    initials: Vec<f64>,
    values: Vec<Vec<f64>>,
    present: Vec<Vec<Option<EventKind>>>,
}

impl Aligned {
    pub fn new(paths: &[&CadlagPath]) -> Self {
        let mut cursors = vec![0usize; paths.len()];
        let mut instants = Vec::new();
        let mut kinds = Vec::new();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); paths.len()];
        let mut present: Vec<Vec<Option<EventKind>>> = vec![Vec::new(); paths.len()];
        let mut current: Vec<f64> = paths.iter().map(|p| p.initial_value).collect();
        loop {
            let next = paths
                .iter()
                .zip(&cursors)
                .filter_map(|(p, &c)| p.events.get(c).map(Event::instant))
                .min_by(|a, b| a.cmp_key(b));
            let Some(inst) = next else { break };
            let mut kind = match inst.class {
                Class::Jump => EventKind::Jump,
                Class::Continuous => EventKind::Drift,
            };
            for (p, path) in paths.iter().enumerate() {
                let hit = path
                    .events
                    .get(cursors[p])
                    .filter(|e| e.instant().cmp_key(&inst) == Ordering::Equal);
                match hit {
                    Some(e) => {
                        current[p] = e.value;
                        if e.kind == EventKind::Grid {
                            kind = EventKind::Grid;
                        }
                        present[p].push(Some(e.kind));
                        cursors[p] += 1;
                    }
                    None => present[p].push(None),
                }
                values[p].push(current[p]);
            }
            instants.push(inst);
            kinds.push(kind);
        }
        Self {
            instants,
            kinds,
            initials: paths.iter().map(|p| p.initial_value).collect(),
            values,
            present,
        }
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn instant(&self, k: usize) -> Instant {
        self.instants[k]
    }

    pub fn instants(&self) -> &[Instant] {
        &self.instants
    }

    /// Merged kind: `Jump` for jump instants, else `Grid` if any path has a grid event.
    pub fn kind(&self, k: usize) -> EventKind {
        self.kinds[k]
    }

    pub fn initial(&self, p: usize) -> f64 {
        self.initials[p]
    }

    pub fn after(&self, p: usize, k: usize) -> f64 {
        self.values[p][k]
    }

    pub fn before(&self, p: usize, k: usize) -> f64 {
        if k == 0 {
            self.initials[p]
        } else {
            self.values[p][k - 1]
        }
    }

    pub fn increment(&self, p: usize, k: usize) -> f64 {
        self.after(p, k) - self.before(p, k)
    }

    pub fn event_kind(&self, p: usize, k: usize) -> Option<EventKind> {
        self.present[p][k]
    }
}

/// Equality used by carrier predicates: exact, or relative `tol`.
pub fn values_match(a: f64, b: f64, tol: f64) -> bool {
    if tol == 0.0 {
        a == b
    } else {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }
}

/// Builds a path from per-instant values, skipping instants with zero increment.
pub(crate) fn path_from_aligned(
    aligned: &Aligned,
    initial: f64,
    value_at: impl Fn(usize) -> f64,
    horizon: f64,
    tail: TailFlag,
) -> Result<CadlagPath, PathError> {
    let mut events = Vec::with_capacity(aligned.len());
    let mut prev = initial;
    for k in 0..aligned.len() {
        let v = value_at(k);
        if v != prev {
            let inst = aligned.instant(k);
            events.push(Event::new(inst.time, v, aligned.kind(k)));
            prev = v;
        }
    }
    CadlagPath::new(initial, events, horizon, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed() -> CadlagPath {
        CadlagPath::new(
            1.0,
            vec![
                Event::new(0.5, 1.5, EventKind::Grid),
                Event::new(1.0, 2.0, EventKind::Drift),
                Event::new(1.0, 0.5, EventKind::Jump),
                Event::new(2.0, 0.75, EventKind::Grid),
            ],
            3.0,
            TailFlag::Truncated,
        )
        .unwrap()
    }

    #[test]
    fn value_and_left_limits() {
        let p = mixed();
        assert_eq!(p.value_at(0.0), 1.0);
        assert_eq!(p.value_at(0.7), 1.5);
        assert_eq!(p.value_at(1.0), 0.5);
        assert_eq!(p.left_limit_at(1.0), 2.0);
        assert_eq!(p.pre_value(1.0), 1.5);
        assert_eq!(p.jump_at(1.0), -1.5);
        assert_eq!(p.jump_at(0.5), 0.0);
        assert_eq!(p.left_limit_at(0.5), 1.5);
    }

    #[test]
    fn rejects_duplicate_instants_and_out_of_range() {
        let dup = CadlagPath::new(
            0.0,
            vec![
                Event::new(1.0, 1.0, EventKind::Jump),
                Event::new(1.0, 2.0, EventKind::Jump),
            ],
            2.0,
            TailFlag::Absorbed,
        );
        assert!(matches!(dup, Err(PathError::Unordered { .. })));
        let jump_then_grid = CadlagPath::new(
            0.0,
            vec![
                Event::new(1.0, 1.0, EventKind::Jump),
                Event::new(1.0, 2.0, EventKind::Grid),
            ],
            2.0,
            TailFlag::Absorbed,
        );
        assert!(jump_then_grid.is_err());
        let late = CadlagPath::step(0.0, &[(3.0, 1.0)], 2.0);
        assert!(matches!(late, Err(PathError::OutsideHorizon { .. })));
    }

    #[test]
    fn split_parts_reassemble() {
        let p = mixed();
        let (c, j) = p.split_parts();
        assert!(j.is_jump_only());
        assert!(c.events().iter().all(|e| e.kind != EventKind::Jump));
        for e in p.events() {
            assert_eq!(c.value_at(e.time) + j.value_at(e.time), p.value_at(e.time));
        }
    }

    #[test]
    fn aligned_sweep_orders_continuous_before_jump() {
        let a = CadlagPath::step(0.0, &[(1.0, 1.0)], 2.0).unwrap();
        let b = CadlagPath::sampled(|t| t, &[0.5, 1.0], EventKind::Drift, 2.0, TailFlag::Absorbed)
            .unwrap();
        let al = Aligned::new(&[&a, &b]);
        assert_eq!(al.len(), 3);
        assert_eq!(al.instant(1), Instant::new(1.0, Class::Continuous));
        assert_eq!(al.instant(2), Instant::new(1.0, Class::Jump));
        assert_eq!(al.before(0, 2), 0.0);
        assert_eq!(al.after(0, 2), 1.0);
        assert_eq!(al.after(1, 2), 1.0);
        assert_eq!(al.kind(2), EventKind::Jump);
        assert_eq!(al.event_kind(1, 2), None);
    }

    #[test]
    fn compact_drops_zero_increments() {
        let p = CadlagPath::step(1.0, &[(1.0, 1.0), (2.0, 3.0)], 3.0).unwrap();
        assert_eq!(p.compact().len(), 1);
    }
}
