use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{path_rng, KahanSum};

/// Broadie-Glasserman shift `ζ(1/2)/√(2π)` for discretely monitored maxima.
pub const CONTINUITY_BETA: f64 = 0.5826;

/// One resampled future: did the event happen, and how much probability of a
/// later hit the truncation may have cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerDraw {
    pub hit: bool,
    pub tail: f64,
}

/// A Markov state together with an event on its future.
pub trait MarkovFuture: Sync {
    type State: Sync;
    fn sample(&self, state: &Self::State, rng: &mut ChaCha8Rng) -> InnerDraw;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestedEstimate {
    pub estimate: f64,
    /// Binomial standard error.
    pub se: f64,
    pub n_inner: usize,
    /// Mean cut-off tail mass; the estimate is low by at most this much.
    pub tail_bound: f64,
}

impl NestedEstimate {
    /// Normal-approximation confidence interval `estimate ± z·SE`.
    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.estimate - z * self.se, self.estimate + z * self.se)
    }
}

/// Fraction of `n_inner` futures from `state` satisfying the model's event.
/// Inner draw `i` uses stream `(master_seed, i, substream)`.
pub fn nested_conditional<M: MarkovFuture>(
    model: &M,
    state: &M::State,
    n_inner: usize,
    master_seed: u64,
    substream: u32,
) -> NestedEstimate {
    let draws: Vec<InnerDraw> = (0..n_inner)
        .into_par_iter()
        .map(|i| model.sample(state, &mut path_rng(master_seed, i as u64, substream)))
        .collect();
    let hits = draws.iter().filter(|d| d.hit).count();
    let mut tail = KahanSum::default();
    draws.iter().filter(|d| !d.hit).for_each(|d| tail.add(d.tail));
    let n = n_inner.max(1) as f64;
    let p = hits as f64 / n;
    NestedEstimate {
        estimate: p,
        se: (p * (1.0 - p) / n).sqrt(),
        n_inner,
        tail_bound: tail.value() / n,
    }
}

/// The event that always happens.
#[derive(Debug, Clone, Copy)]
pub struct AlwaysTrue;

impl MarkovFuture for AlwaysTrue {
    type State = ();
    fn sample(&self, _: &(), _: &mut ChaCha8Rng) -> InnerDraw {
        InnerDraw { hit: true, tail: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmState {
    pub t: f64,
    pub u: f64,
}

/// `U = exp(B - t/2)` restarted from `(t, U_t)`; event `sup_{t<s≤H} U_s ≥ λ`.
///
/// Log-space Euler steps of size `dt`, with the barrier lowered by
/// `β·√dt` when `continuity_correction` is set. A future that reaches
/// `U ≤ negligible·λ` is stopped as a miss; its tail is `U/λ` (Doob's bound),
/// as is the tail `U_H/λ` of a future that ends at the horizon.
#[derive(Debug, Clone, Copy)]
pub struct GbmSupFuture {
    pub lambda: f64,
    pub dt: f64,
    pub horizon: f64,
    pub continuity_correction: bool,
    pub negligible: f64,
}

impl GbmSupFuture {
    pub fn new(lambda: f64, dt: f64, horizon: f64) -> Self {
        Self { lambda, dt, horizon, continuity_correction: true, negligible: 1e-7 }
    }
}

impl MarkovFuture for GbmSupFuture {
    type State = GbmState;

    fn sample(&self, state: &GbmState, rng: &mut ChaCha8Rng) -> InnerDraw {
        let sqrt_dt = self.dt.sqrt();
        let log_lambda = self.lambda.ln();
        let shift = if self.continuity_correction { CONTINUITY_BETA * sqrt_dt } else { 0.0 };
        let barrier = log_lambda - shift;
        let floor = log_lambda + self.negligible.ln();
        let steps = ((self.horizon - state.t) / self.dt).round().max(0.0) as usize;
        let mut x = state.u.ln();
        if x >= barrier {
            return InnerDraw { hit: true, tail: 0.0 };
        }
        for _ in 0..steps {
            let z: f64 = StandardNormal.sample(rng);
            x += sqrt_dt * z - 0.5 * self.dt;
            if x >= barrier {
                return InnerDraw { hit: true, tail: 0.0 };
            }
            if x < floor {
                break;
            }
        }
        InnerDraw { hit: false, tail: (x - log_lambda).exp() }
    }
}

/// State `log(W/W*) ≤ 0` of `W = 2^N e^{-u}` with `N` unit Poisson.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioState {
    pub log_ratio: f64,
}

/// Event "the ratio walk climbs back to 1": `sup_{u>0} r·2^{N_u}e^{-u} ≥ 1`.
///
/// A future is stopped as a miss once its log-ratio falls `slack` below 0 or
/// the time reaches `horizon`. From log-level `-x` the return probability is
/// at most `e^{-x}` (the Lundberg exponent of `N ln 2 - u` is 1), which is the
/// reported tail of a stopped future.
#[derive(Debug, Clone, Copy)]
pub struct RatioWalkFuture {
    pub horizon: f64,
    pub slack: f64,
}

impl Default for RatioWalkFuture {
    fn default() -> Self {
        Self { horizon: 50.0, slack: 30.0 }
    }
}

impl MarkovFuture for RatioWalkFuture {
    type State = RatioState;

    fn sample(&self, state: &RatioState, rng: &mut ChaCha8Rng) -> InnerDraw {
        let mut level = state.log_ratio;
        let mut elapsed = 0.0;
        loop {
            let tau: f64 = Exp1.sample(rng);
            if elapsed + tau > self.horizon {
                let end = level - (self.horizon - elapsed);
                return InnerDraw { hit: false, tail: end.exp() };
            }
            elapsed += tau;
            level += std::f64::consts::LN_2 - tau;
            if level >= 0.0 {
                return InnerDraw { hit: true, tail: 0.0 };
            }
            if level < -self.slack {
                return InnerDraw { hit: false, tail: level.exp() };
            }
        }
    }
}
