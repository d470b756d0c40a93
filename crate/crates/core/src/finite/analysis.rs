use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use super::model::{AdaptedProcess, FiniteProbModel, FiniteRandomTime, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("random time is not honest")]
    NotHonest,
    #[error("{0} is not a stopping time")]
    NotStoppingTime(&'static str),
    #[error("S > T at outcome {0}")]
    NotOrdered(usize),
}

/// Location of a failed identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub check: String,
    pub period: usize,
    pub outcome: usize,
}

impl Witness {
    pub fn new(check: &str, period: usize, outcome: usize) -> Self {
        Self { check: check.to_string(), period, outcome }
    }
}

/// The projections of a random time `ρ` on a finite model.
///
/// `a_opt` is `A` (increments `E[1_{ρ=n, ρ>0} | P_n]`), `a_pred` is `a`
/// (increments `E[1_{ρ=n, ρ>0} | P_{n-1}]`); `shadow[n][ω]` is `Z̃_n(ω) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AzemaAnalysis {
    pub z: AdaptedProcess,
    pub z_tilde: AdaptedProcess,
    pub a_opt: AdaptedProcess,
    pub a_pred: AdaptedProcess,
    pub m_opt: AdaptedProcess,
    pub m_pred: AdaptedProcess,
    pub shadow: Vec<Vec<bool>>,
}

fn indicator(rho: &FiniteRandomTime, f: impl Fn(usize) -> bool) -> Vec<Q> {
    rho.values().iter().map(|&r| if f(r) { Q::one() } else { Q::zero() }).collect()
}

pub fn azema_analysis(model: &FiniteProbModel, rho: &FiniteRandomTime) -> AzemaAnalysis {
    let horizon = model.periods();
    let mut z = Vec::with_capacity(horizon + 1);
    let mut z_tilde = Vec::with_capacity(horizon + 1);
    let mut d_opt = Vec::with_capacity(horizon + 1);
    let mut d_pred = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        z.push(model.cond_expect(&indicator(rho, |r| r > n), n));
        z_tilde.push(model.cond_expect(&indicator(rho, |r| r >= n), n));
        let hit = indicator(rho, |r| r == n && r > 0);
        d_opt.push(model.cond_expect(&hit, n));
        d_pred.push(if n == 0 { hit.clone() } else { model.cond_expect(&hit, n - 1) });
    }
    let z = AdaptedProcess::from_columns(z);
    let z_tilde = AdaptedProcess::from_columns(z_tilde);
    let a_opt = AdaptedProcess::cumulative(&d_opt);
    let a_pred = AdaptedProcess::cumulative(&d_pred);
    let m_opt = z.zip_with(&a_opt, |x, y| x + y);
    let m_pred = z.zip_with(&a_pred, |x, y| x + y);
    let shadow = (0..=horizon)
        .map(|n| z_tilde.column(n).iter().map(|v| v.is_one()).collect())
        .collect();
    AzemaAnalysis { z, z_tilde, a_opt, a_pred, m_opt, m_pred, shadow }
}

pub fn is_honest(analysis: &AzemaAnalysis, rho: &FiniteRandomTime) -> bool {
    rho.values()
        .iter()
        .enumerate()
        .all(|(w, &r)| analysis.z_tilde.at(r, w).is_one())
}

/// An adapted set `O` with `ρ = max{n : (ω, n) ∈ O}`, if one exists.
///
/// Membership of a `P_n`-cell is forced when some outcome in it has `ρ = n`
/// and forbidden when some outcome has `ρ < n`; cells decide independently,
/// so `O` exists iff no cell is both forced and forbidden. The forced cells
/// form the smallest such `O`.
pub fn sup_representing_set(model: &FiniteProbModel, rho: &FiniteRandomTime) -> Option<Vec<Vec<bool>>> {
    let mut set = vec![vec![false; model.n_outcomes()]; model.periods() + 1];
    for (n, row) in set.iter_mut().enumerate() {
        for members in model.cells(n) {
            let forced = members.iter().any(|&w| rho.at(w) == n);
            let forbidden = members.iter().any(|&w| rho.at(w) < n);
            if forced && forbidden {
                return None;
            }
            for &w in members {
                row[w] = forced;
            }
        }
    }
    Some(set)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HonestSupportReport {
    pub da_on_shadow: bool,
    pub jump_set_identity: bool,
    pub z_minus_one_in_shadow: bool,
    pub z_tilde_equals_z_off_shadow: bool,
    pub z_vanishes_after_r: bool,
    /// `{Z_- = 1 or Z = 1} ⊂ C`; reported, not part of [`Self::pass`].
    pub z_or_z_minus_one_in_shadow: bool,
    pub witness: Option<Witness>,
}

impl HonestSupportReport {
    pub fn pass(&self) -> bool {
        self.da_on_shadow
            && self.jump_set_identity
            && self.z_minus_one_in_shadow
            && self.z_tilde_equals_z_off_shadow
            && self.z_vanishes_after_r
    }
}

/// Per outcome, `R = sup_k inf{n : Z_n ≤ 1/k}` (`None` for `+∞`).
pub fn vanishing_time(model: &FiniteProbModel, z: &AdaptedProcess) -> Vec<Option<usize>> {
    let horizon = model.periods();
    let min_positive = (0..=horizon)
        .flat_map(|n| z.column(n).iter().copied())
        .filter(|v| *v > Q::zero())
        .min();
    // Past k with 1/k below every positive value, R_k is the first zero of Z.
    let k_max = min_positive.map_or(1, |m| (m.recip().to_integer() + 2) as usize);
    (0..model.n_outcomes())
        .map(|w| {
            let mut r = Some(0);
            for k in 1..=k_max {
                let level = Q::new(1, k as i128);
                let rk = (0..=horizon).find(|&n| z.at(n, w) <= level);
                r = match (r, rk) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            r
        })
        .collect()
}

/// `Z_s = 0` for every `s ≥ R`, checked on all outcomes.
pub fn z_vanishes_after_r(model: &FiniteProbModel, z: &AdaptedProcess) -> Option<Witness> {
    for (w, r) in vanishing_time(model, z).into_iter().enumerate() {
        if let Some(r) = r {
            if let Some(n) = (r..=model.periods()).find(|&n| !z.at(n, w).is_zero()) {
                return Some(Witness::new("z_vanishes_after_r", n, w));
            }
        }
    }
    None
}

pub fn honest_support_checks(
    model: &FiniteProbModel,
    analysis: &AzemaAnalysis,
    rho: &FiniteRandomTime,
) -> Result<HonestSupportReport, AnalysisError> {
    if !is_honest(analysis, rho) {
        return Err(AnalysisError::NotHonest);
    }
    let mut report = HonestSupportReport {
        da_on_shadow: true,
        jump_set_identity: true,
        z_minus_one_in_shadow: true,
        z_tilde_equals_z_off_shadow: true,
        z_vanishes_after_r: true,
        z_or_z_minus_one_in_shadow: true,
        witness: None,
    };
    let fail = |flag: &mut bool, witness: &mut Option<Witness>, name: &str, n: usize, w: usize| {
        *flag = false;
        witness.get_or_insert_with(|| Witness::new(name, n, w));
    };
    let a = &analysis;
    for n in 0..=model.periods() {
        for w in 0..model.n_outcomes() {
            let da = a.a_opt.increment(n, w);
            let in_c = a.shadow[n][w];
            let (z, zt) = (a.z.at(n, w), a.z_tilde.at(n, w));
            let mut wit = report.witness.take();
            if da > Q::zero() && !in_c {
                fail(&mut report.da_on_shadow, &mut wit, "da_on_shadow", n, w);
            }
            if n > 0 && (da > Q::zero()) != (zt > z) {
                fail(&mut report.jump_set_identity, &mut wit, "jump_set_identity", n, w);
            }
            if n > 0 && a.z.at(n - 1, w).is_one() && !in_c {
                fail(&mut report.z_minus_one_in_shadow, &mut wit, "z_minus_one_in_shadow", n, w);
            }
            if !in_c && zt != z {
                fail(&mut report.z_tilde_equals_z_off_shadow, &mut wit, "z_tilde_equals_z_off_shadow", n, w);
            }
            report.witness = wit;
            let z_minus_one = n > 0 && a.z.at(n - 1, w).is_one();
            if (z_minus_one || z.is_one()) && !in_c {
                report.z_or_z_minus_one_in_shadow = false;
            }
        }
    }
    if let Some(wit) = z_vanishes_after_r(model, &a.z) {
        report.z_vanishes_after_r = false;
        report.witness.get_or_insert(wit);
    }
    Ok(report)
}

/// `G_T(ω) = max{s ≤ T(ω) : Z̃_s(ω) = 1}`; always defined since `Z̃_0 = 1`.
pub fn last_sojourn(analysis: &AzemaAnalysis, t: &FiniteRandomTime) -> Vec<usize> {
    t.values()
        .iter()
        .enumerate()
        .map(|(w, &tw)| (0..=tw).rev().find(|&s| analysis.shadow[s][w]).unwrap_or(0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeMartingaleReport {
    pub optional: bool,
    pub strong: bool,
    pub witness: Option<Witness>,
}

impl RelativeMartingaleReport {
    pub fn pass(&self) -> bool {
        self.optional && self.strong
    }
}

/// `1 - Z_S = E[(1 - Z_T) 1_{G_T ≤ S} | F_S]` and
/// `1 - Z̃_S = E[(1 - Z̃_T) 1_{G_T < S} | F_S]` for stopping times `S ≤ T`.
pub fn relative_martingale_check(
    model: &FiniteProbModel,
    analysis: &AzemaAnalysis,
    s: &FiniteRandomTime,
    t: &FiniteRandomTime,
) -> Result<RelativeMartingaleReport, AnalysisError> {
    if !model.is_stopping_time(s) {
        return Err(AnalysisError::NotStoppingTime("S"));
    }
    if !model.is_stopping_time(t) {
        return Err(AnalysisError::NotStoppingTime("T"));
    }
    if let Some(w) = (0..model.n_outcomes()).find(|&w| s.at(w) > t.at(w)) {
        return Err(AnalysisError::NotOrdered(w));
    }
    let g = last_sojourn(analysis, t);
    let one = Q::one();
    let lhs_opt: Vec<Q> = (0..model.n_outcomes())
        .map(|w| {
            let keep = g[w] <= s.at(w);
            if keep { one - analysis.z.at(t.at(w), w) } else { Q::zero() }
        })
        .collect();
    let lhs_strong: Vec<Q> = (0..model.n_outcomes())
        .map(|w| {
            let keep = g[w] < s.at(w);
            if keep { one - analysis.z_tilde.at(t.at(w), w) } else { Q::zero() }
        })
        .collect();
    let mut report = RelativeMartingaleReport { optional: true, strong: true, witness: None };
    // On {S = n}, conditioning on F_S is conditioning on P_n.
    let mut cache: Vec<Option<(Vec<Q>, Vec<Q>)>> = vec![None; model.periods() + 1];
    for w in 0..model.n_outcomes() {
        let n = s.at(w);
        let (ce_opt, ce_strong) = cache[n].get_or_insert_with(|| {
            (model.cond_expect(&lhs_opt, n), model.cond_expect(&lhs_strong, n))
        });
        if one - analysis.z.at(n, w) != ce_opt[w] {
            report.optional = false;
            report.witness.get_or_insert_with(|| Witness::new("relative_martingale_optional", n, w));
        }
        if one - analysis.z_tilde.at(n, w) != ce_strong[w] {
            report.strong = false;
            report.witness.get_or_insert_with(|| Witness::new("relative_martingale_strong", n, w));
        }
    }
    Ok(report)
}

/// All stopping times of the model with values in `{0, …, N}`.
///
/// Built cell by cell: a `P_n`-cell not yet stopped either stops at `n` or
/// passes to its children; every cell stops at `N` at the latest.
pub fn all_stopping_times(model: &FiniteProbModel) -> Vec<FiniteRandomTime> {
    fn extend(model: &FiniteProbModel, n: usize, open: Vec<usize>, acc: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if open.is_empty() {
            out.push(acc);
            return;
        }
        if n == model.periods() {
            let mut acc = acc;
            for members in open.iter().map(|&c| &model.cells(n)[c]) {
                for &w in members {
                    acc[w] = n;
                }
            }
            out.push(acc);
            return;
        }
        let k = open.len();
        for mask in 0u64..(1 << k) {
            let mut acc = acc.clone();
            let mut next = Vec::new();
            for (i, &c) in open.iter().enumerate() {
                let members = &model.cells(n)[c];
                if mask >> i & 1 == 1 {
                    for &w in members {
                        acc[w] = n;
                    }
                } else {
                    let mut children: Vec<usize> = members.iter().map(|&w| model.cell(n + 1, w)).collect();
                    children.dedup();
                    next.extend(children);
                }
            }
            next.sort_unstable();
            next.dedup();
            extend(model, n + 1, next, acc, out);
        }
    }
    let mut out = Vec::new();
    let roots: Vec<usize> = (0..model.n_cells(0)).collect();
    extend(model, 0, roots, vec![0; model.n_outcomes()], &mut out);
    out.into_iter()
        .map(|v| FiniteRandomTime::new(model, v).expect("values within the horizon"))
        .collect()
}
