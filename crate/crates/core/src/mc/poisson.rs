use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::McError;
use crate::path::{CadlagPath, Event, EventKind, TailFlag};

/// Arrival times of a rate-`rate` Poisson process on `[0, horizon]`.
pub fn poisson_arrivals<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>, McError> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(McError::BadRate(rate));
    }
    let exp = Exp::new(rate).map_err(|_| McError::BadRate(rate))?;
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        if t > horizon {
            return Ok(out);
        }
        out.push(t);
    }
}

/// Counting path with unit `Jump` events at the arrivals. The tail is
/// truncated: arrivals continue past the horizon.
pub fn simulate_poisson<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Result<CadlagPath, McError> {
    let arrivals = poisson_arrivals(rate, horizon, rng)?;
    let events = arrivals
        .iter()
        .enumerate()
        .map(|(i, &t)| Event::new(t, (i + 1) as f64, EventKind::Jump))
        .collect();
    Ok(CadlagPath::new(0.0, events, horizon, TailFlag::Truncated)?)
}

/// `N_t - rate·t` with `Drift` events on the grid and at every arrival (the
/// left limit), so values are exact at grid times and at jumps.
pub fn compensated(counting: &CadlagPath, rate: f64, grid: &[f64]) -> Result<CadlagPath, McError> {
    let mut events = Vec::with_capacity(grid.len() + 2 * counting.len());
    let jumps = counting.events();
    let (mut g, mut j) = (0, 0);
    let mut n = counting.initial_value();
    loop {
        let tg = grid.get(g).copied().unwrap_or(f64::INFINITY);
        let tj = jumps.get(j).map_or(f64::INFINITY, |e| e.time);
        if tg == f64::INFINITY && tj == f64::INFINITY {
            break;
        }
        let t = tg.min(tj);
        if t > 0.0 {
            events.push(Event::new(t, n - rate * t, EventKind::Drift));
        }
        if tj == t {
            n = jumps[j].value;
            events.push(Event::new(t, n - rate * t, EventKind::Jump));
            j += 1;
        }
        if tg == t {
            g += 1;
        }
    }
    Ok(CadlagPath::new(counting.initial_value(), events, counting.horizon(), counting.tail())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::path_rng;

    #[test]
    fn zero_horizon_is_empty() {
        let p = simulate_poisson(1.0, 0.0, &mut path_rng(1, 0, 0)).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.final_value(), 0.0);
    }

    #[test]
    fn rejects_bad_rate() {
        assert!(simulate_poisson(0.0, 1.0, &mut path_rng(1, 0, 0)).is_err());
    }

    #[test]
    fn compensated_values_at_grid_and_jumps() {
        let n = CadlagPath::step(0.0, &[(0.3, 1.0), (0.75, 2.0)], 1.0).unwrap();
        let grid = [0.25, 0.5, 0.75, 1.0];
        let c = compensated(&n, 2.0, &grid).unwrap();
        assert_eq!(c.value_at(0.25), -0.5);
        assert_eq!(c.left_limit_at(0.3), -0.6);
        assert_eq!(c.value_at(0.3), 1.0 - 0.6);
        assert_eq!(c.left_limit_at(0.75), 1.0 - 1.5);
        assert_eq!(c.value_at(0.75), 2.0 - 1.5);
        assert_eq!(c.value_at(1.0), 0.0);
    }
}
