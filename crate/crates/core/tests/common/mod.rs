//! Random step-path generators shared by the property suites and acceptance.
//! Times sit on a 1/64 lattice and values on small dyadic lattices, so sums
//! and products stay exact in f64.
#![allow(dead_code)]

use maxrep::calc::{covariation, gexp_forward, integrate_left, ratio_decomposition, supmultip_transform};
use maxrep::path::{running_max, skorokhod_solve, verify_skorokhod, Aligned, CadlagPath};
use rand::seq::index::sample;
use rand::Rng;

pub const HORIZON: f64 = 8.0;
const SLOTS: usize = 512;

/// `n` distinct sorted jump times in `(0, HORIZON]`.
pub fn jump_times<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = sample(rng, SLOTS, n.min(SLOTS)).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|k| (k + 1) as f64 / 64.0).collect()
}

/// Step path with integer values in `[-lim, lim]`.
pub fn integer_path<R: Rng>(rng: &mut R, max_jumps: usize, lim: i32) -> CadlagPath {
    let n = rng.random_range(0..=max_jumps);
    let x0 = f64::from(rng.random_range(-lim..=lim));
    let steps: Vec<(f64, f64)> = jump_times(rng, n)
        .into_iter()
        .map(|t| (t, f64::from(rng.random_range(-lim..=lim))))
        .collect();
    CadlagPath::step(x0, &steps, HORIZON).unwrap()
}

/// Step path `w` with `w(0) = 0` and `(w* ∨ 0) - w ≤ 1`, values in quarters.
pub fn gexp_input<R: Rng>(rng: &mut R, max_jumps: usize) -> CadlagPath {
    let n = rng.random_range(0..=max_jumps);
    let mut w = 0.0f64;
    let mut top = 0.0f64;
    let mut steps = Vec::with_capacity(n);
    for t in jump_times(rng, n) {
        let floor = top - 1.0;
        let step = f64::from(rng.random_range(-4..=4)) / 4.0;
        w = (w + step).max(floor);
        top = top.max(w);
        steps.push((t, w));
    }
    CadlagPath::step(0.0, &steps, HORIZON).unwrap()
}

/// `(X, v)` meeting the preconditions of the multiplier transform without a
/// stopping time: `X ≥ 0`, `v` non-decreasing, `dv` only where `X_- = X*_-`
/// and never at a downward jump of `X`.
pub fn supmultip_input<R: Rng>(rng: &mut R, max_jumps: usize) -> (CadlagPath, CadlagPath) {
    let n = rng.random_range(0..=max_jumps);
    let x0 = f64::from(rng.random_range(0..=16)) / 4.0;
    let steps: Vec<(f64, f64)> = jump_times(rng, n)
        .into_iter()
        .map(|t| (t, f64::from(rng.random_range(0..=16)) / 4.0))
        .collect();
    let x = CadlagPath::step(x0, &steps, HORIZON).unwrap();
    let xstar = running_max(&x);
    let mut v = f64::from(rng.random_range(0..=4)) / 8.0;
    let v0 = v;
    let mut v_steps = Vec::new();
    let n_v = rng.random_range(0..=max_jumps);
    for t in jump_times(rng, n_v) {
        let at_max = x.left_limit_at(t) == xstar.left_limit_at(t);
        if at_max && x.jump_at(t) >= 0.0 {
            v += f64::from(rng.random_range(1..=4)) / 8.0;
            v_steps.push((t, v));
        }
    }
    (x, CadlagPath::step(v0, &v_steps, HORIZON).unwrap())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct PropertyTally {
    pub skorokhod: usize,
    pub gexp: usize,
    pub supmultip: usize,
    pub by_parts: usize,
}

pub fn skorokhod_holds(x: &CadlagPath) -> bool {
    verify_skorokhod(x, &skorokhod_solve(x)).pass
}

/// `U = 1 + ℰ(γ)_-·w` has `U* = ℰ(γ)` and `U/U* = 1 + w - γ`.
pub fn gexp_holds(w: &CadlagPath) -> bool {
    let Ok(out) = gexp_forward(w) else { return false };
    if !out.ok {
        return false;
    }
    let Ok(dec) = ratio_decomposition(&out.u) else { return false };
    let aligned = Aligned::new(&[&dec.z, w, &out.gamma]);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    close(aligned.initial(0), 1.0)
        && (0..aligned.len()).all(|k| close(aligned.after(0, k), 1.0 + aligned.after(1, k) - aligned.after(2, k)))
}

pub fn supmultip_holds(x: &CadlagPath, v: &CadlagPath) -> bool {
    supmultip_transform(x, v, None).is_ok_and(|o| o.ok)
}

/// `XY - X_0Y_0 = X_-·Y + Y_-·X + [X, Y]` with zero tolerance.
pub fn by_parts_exact(x: &CadlagPath, y: &CadlagPath) -> bool {
    let xy = integrate_left(x, y).unwrap();
    let yx = integrate_left(y, x).unwrap();
    let br = covariation(x, y).unwrap();
    let a = Aligned::new(&[x, y, &xy, &yx, &br]);
    let start = a.initial(0) * a.initial(1);
    (0..a.len()).all(|k| a.after(0, k) * a.after(1, k) - start == a.after(2, k) + a.after(3, k) + a.after(4, k))
}

/// Runs the four property checks on `n` freshly drawn inputs each.
pub fn property_suite<R: Rng>(rng: &mut R, n: usize) -> PropertyTally {
    let mut tally = PropertyTally::default();
    for _ in 0..n {
        tally.skorokhod += usize::from(skorokhod_holds(&integer_path(rng, 30, 6)));
        tally.gexp += usize::from(gexp_holds(&gexp_input(rng, 30)));
        let (x, v) = supmultip_input(rng, 30);
        tally.supmultip += usize::from(supmultip_holds(&x, &v));
        let (x, y) = (integer_path(rng, 30, 9), integer_path(rng, 30, 9));
        tally.by_parts += usize::from(by_parts_exact(&x, &y));
    }
    tally
}

/// Step path from 1 with values in quarters in `(0, 4]`, optionally absorbed
/// at 0 by a final jump.
pub fn positive_step_path<R: Rng>(rng: &mut R, max_jumps: usize) -> CadlagPath {
    let n = rng.random_range(0..=max_jumps);
    let times = jump_times(rng, n + 1);
    let mut steps: Vec<(f64, f64)> =
        times[..n].iter().map(|&t| (t, f64::from(rng.random_range(1..=16)) / 4.0)).collect();
    if rng.random_bool(0.5) {
        steps.push((times[n], 0.0));
    }
    CadlagPath::step(1.0, &steps, HORIZON).unwrap()
}

/// Two pure-jump paths from 0 whose jumps (all > -1) never coincide.
pub fn disjoint_jump_pair<R: Rng>(rng: &mut R, max_jumps: usize) -> (CadlagPath, CadlagPath) {
    let n = rng.random_range(0..=max_jumps);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let (mut xa, mut xb) = (0.0, 0.0);
    for t in jump_times(rng, n) {
        let d = f64::from(rng.random_range(-7..=12)) / 8.0;
        if rng.random_bool(0.5) {
            xa += d;
            a.push((t, xa));
        } else {
            xb += d;
            b.push((t, xb));
        }
    }
    (CadlagPath::step(0.0, &a, HORIZON).unwrap(), CadlagPath::step(0.0, &b, HORIZON).unwrap())
}
