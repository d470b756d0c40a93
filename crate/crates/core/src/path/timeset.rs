use serde::Serialize;

use super::PathError;

/// Finite union of disjoint closed intervals `[a, b]` (points when `a == b`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedTimeSet {
    components: Vec<(f64, f64)>,
    horizon: f64,
}

/// Last sojourn and entrance times of a closed set around `t`.
///
/// `None` codes `sup ∅`; `f64::INFINITY` codes `inf ∅`. When the set
/// accumulates at `t` from the right, `big_d == t` with `d_immediate` set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SojournTimes {
    pub big_g: Option<f64>,
    pub small_g: Option<f64>,
    pub big_d: f64,
    pub small_d: f64,
    pub d_immediate: bool,
}

impl ClosedTimeSet {
    pub fn new(components: Vec<(f64, f64)>, horizon: f64) -> Result<Self, PathError> {
        for (i, &(a, b)) in components.iter().enumerate() {
            if !(a <= b) || a < 0.0 || b > horizon {
                return Err(PathError::BadTimeSet(a));
            }
            if i > 0 && components[i - 1].1 >= a {
                return Err(PathError::BadTimeSet(a));
            }
        }
        Ok(Self { components, horizon })
    }

    pub fn from_points(points: &[f64], horizon: f64) -> Result<Self, PathError> {
        Self::new(points.iter().map(|&p| (p, p)).collect(), horizon)
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_finite_set(&self) -> bool {
        self.components.iter().all(|&(a, b)| a == b)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.components.iter().any(|&(a, b)| a <= t && t <= b)
    }

    /// Points `t` of the set with `t < D_t`: the right endpoints of components.
    pub fn right_isolated_points(&self) -> Vec<f64> {
        self.components.iter().map(|&(_, b)| b).collect()
    }

    pub fn sojourn_query(&self, t: f64) -> SojournTimes {
        let big_g = self
            .components
            .iter()
            .rev()
            .find(|&&(a, _)| a <= t)
            .map(|&(_, b)| b.min(t));
        let small_g = self
            .components
            .iter()
            .rev()
            .find(|&&(a, _)| a < t)
            .map(|&(_, b)| b.min(t));
        let small_d = self
            .components
            .iter()
            .find(|&&(_, b)| b >= t)
            .map_or(f64::INFINITY, |&(a, _)| a.max(t));
        let (big_d, d_immediate) = self
            .components
            .iter()
            .find(|&&(_, b)| b > t)
            .map_or((f64::INFINITY, false), |&(a, _)| (a.max(t), a <= t));
        SojournTimes { big_g, small_g, big_d, small_d, d_immediate }
    }
}
