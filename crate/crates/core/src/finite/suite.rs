//! Enumeration of small probability trees and random times, running every
//! finite checker with zero tolerance.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::analysis::{
    all_stopping_times, azema_analysis, honest_support_checks, is_honest, relative_martingale_check,
    sup_representing_set, z_vanishes_after_r, AzemaAnalysis, Witness,
};
use super::mmr::{mmr_search, MmrSearch};
use super::model::{moves_of, q, FiniteProbModel, FiniteRandomTime, Q};

pub const MAX_PERIODS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("max_periods {0} exceeds the limit of {MAX_PERIODS}")]
    TooManyPeriods(usize),
    #[error("branching must be 2 or 3, got {0}")]
    BadBranching(usize),
}

/// Mutation hooks proving the checkers can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// Adds `1/1000` to `Z̃_1` on the first outcome.
    ZTilde,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub max_periods: usize,
    pub branching: usize,
    /// Random times per model when exhaustive enumeration is over budget.
    pub sample_per_model: usize,
    /// Exhaustive enumeration of random times is used up to this many.
    pub exhaustive_limit: usize,
    /// Stopping-time pairs per honest time when all pairs are over budget.
    pub pair_sample: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            max_periods: 4,
            branching: 2,
            sample_per_model: 300,
            exhaustive_limit: 10_000,
            pair_sample: 64,
            seed: 1,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub checked: u64,
    pub passed: u64,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        self.passed += u64::from(ok);
    }

    fn merge(&mut self, other: Tally) {
        self.checked += other.checked;
        self.passed += other.passed;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteWitness {
    pub model: String,
    pub rho: Vec<usize>,
    #[serde(flatten)]
    pub at: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub models: usize,
    pub cases: usize,
    pub honest_cases: usize,
    pub checks: BTreeMap<String, Tally>,
    /// Reported only: `{Z_- = 1 or Z = 1} ⊂ C` on honest cases.
    pub shadow_variant: Tally,
    pub witness: Option<SuiteWitness>,
    pub pass: bool,
}

/// Stopping times of a model and the ordered pairs `S ≤ T` among them.
type StoppingPairs = (Vec<FiniteRandomTime>, Vec<(usize, usize)>);

// Enumerated only where the count stays small (677 times on the 4-period binary tree).
fn stopping_pairs(model: &FiniteProbModel) -> StoppingPairs {
    if model.n_outcomes() > 16 {
        return (Vec::new(), Vec::new());
    }
    let times = all_stopping_times(model);
    let pairs = (0..times.len())
        .flat_map(|i| (0..times.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| times[i].values().iter().zip(times[j].values()).all(|(s, t)| s <= t))
        .collect();
    (times, pairs)
}

struct Case {
    label: String,
    model: usize,
    rho: FiniteRandomTime,
}

#[derive(Default)]
struct CaseResult {
    checks: BTreeMap<&'static str, Tally>,
    variant: Tally,
    honest: bool,
    witness: Option<Witness>,
}

impl CaseResult {
    fn record(&mut self, name: &'static str, failure: Option<Witness>) {
        self.checks.entry(name).or_default().record(failure.is_none());
        if let Some(w) = failure {
            self.witness.get_or_insert(w);
        }
    }
}

fn models_for(periods: usize, branching: usize) -> Vec<(String, FiniteProbModel)> {
    if branching == 2 {
        let mut out: Vec<(String, FiniteProbModel)> = [(1, 2), (1, 3), (2, 3)]
            .iter()
            .map(|&(a, b)| (format!("binary N={periods} p={a}/{b}"), FiniteProbModel::homogeneous_binary(periods, q(a, b))))
            .collect();
        let choices = [q(1, 2), q(1, 3), q(2, 3)];
        let mixed = FiniteProbModel::tree(2, periods, |prefix| {
            let node = prefix.iter().fold(1usize, |acc, &b| 2 * acc + b);
            let p = choices[node % 3];
            vec![p, Q::one() - p]
        })
        .expect("valid tree");
        out.push((format!("binary N={periods} mixed"), mixed));
        out
    } else {
        let uniform = FiniteProbModel::tree(3, periods, |_| vec![q(1, 3); 3]).expect("valid tree");
        let skew = FiniteProbModel::tree(3, periods, |_| vec![q(1, 2), q(1, 3), q(1, 6)]).expect("valid tree");
        vec![
            (format!("ternary N={periods} uniform"), uniform),
            (format!("ternary N={periods} skew"), skew),
        ]
    }
}

/// Last period `n ≥ 1` at which the ±1 walk driven by branch 0 is at its running max.
fn last_max_time(w: usize, branching: usize, periods: usize) -> usize {
    let mut s = 0i64;
    let mut best = (i64::MIN, 1);
    for (n, b) in moves_of(w, branching, periods).into_iter().enumerate() {
        s += if b == 0 { 1 } else { -1 };
        if s >= best.0 {
            best = (s, n + 1);
        }
    }
    best.1
}

fn random_times(
    model: &FiniteProbModel,
    branching: usize,
    exhaustive: bool,
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<FiniteRandomTime> {
    let periods = model.periods();
    let n_out = model.n_outcomes();
    let total = (periods as u128).checked_pow(n_out as u32);
    let mut out = Vec::new();
    if exhaustive || total.is_some_and(|t| t <= cfg.sample_per_model as u128) {
        let total = total.expect("checked above") as u64;
        for code in 0..total {
            let mut rest = code;
            let values = (0..n_out)
                .map(|_| {
                    let v = (rest % periods as u64) as usize + 1;
                    rest /= periods as u64;
                    v
                })
                .collect();
            out.push(FiniteRandomTime::new(model, values).expect("in range"));
        }
        return out;
    }
    let structured = [
        (0..n_out).map(|w| last_max_time(w, branching, periods)).collect::<Vec<_>>(),
        vec![periods; n_out],
        vec![1; n_out],
    ];
    for values in structured {
        out.push(FiniteRandomTime::new(model, values).expect("in range"));
    }
    while out.len() < cfg.sample_per_model {
        let values = (0..n_out).map(|_| rng.random_range(1..=periods)).collect();
        out.push(FiniteRandomTime::new(model, values).expect("in range"));
    }
    out
}

fn inject(analysis: &mut AzemaAnalysis, fault: Option<Fault>) {
    if let Some(Fault::ZTilde) = fault {
        if analysis.z_tilde.periods() >= 1 {
            let v = analysis.z_tilde.at(1, 0) + q(1, 1000);
            analysis.z_tilde.set(1, 0, v);
        }
    }
}

fn check_case(
    model: &FiniteProbModel,
    rho: &FiniteRandomTime,
    stopping: &StoppingPairs,
    cfg: &SuiteConfig,
    pair_seed: u64,
) -> CaseResult {
    let mut res = CaseResult::default();
    let mut a = azema_analysis(model, rho);
    inject(&mut a, cfg.fault);
    let n_out = model.n_outcomes();
    let horizon = model.periods();

    let mut first = None;
    if !a.z_tilde.column(0).iter().all(Q::is_one) {
        first = Some(Witness::new("z_tilde_identity", 0, 0));
    }
    'outer: for n in 1..=horizon {
        for w in 0..n_out {
            if a.z_tilde.at(n, w) != a.z.at(n, w) + a.a_opt.increment(n, w) {
                first = Some(Witness::new("z_tilde_identity", n, w));
                break 'outer;
            }
        }
    }
    res.record("z_tilde_identity", first);

    let z0 = model.cond_expect(&rho.values().iter().map(|&r| if r > 0 { Q::one() } else { Q::zero() }).collect::<Vec<_>>(), 0);
    let bad_z0 = (0..n_out).find(|&w| a.z.at(0, w) != z0[w]);
    res.record("z_initial", bad_z0.map(|w| Witness::new("z_initial", 0, w)));

    let defect = |name: &str, d: Option<(usize, usize)>| d.map(|(n, w)| Witness::new(name, n, w));
    res.record("m_optional_martingale", defect("m_optional_martingale", a.m_opt.martingale_defect(model)));
    res.record("m_predictable_martingale", defect("m_predictable_martingale", a.m_pred.martingale_defect(model)));

    let mut pred = None;
    for n in 1..=horizon {
        let da: Vec<Q> = (0..n_out).map(|w| a.a_opt.increment(n, w)).collect();
        let dp: Vec<Q> = (0..n_out).map(|w| a.a_pred.increment(n, w)).collect();
        if !model.is_measurable(&dp, n - 1) || model.cond_expect(&da, n - 1) != dp {
            pred = Some(Witness::new("a_predictable_dual", n, 0));
            break;
        }
    }
    res.record("a_predictable_dual", pred);

    let mut no_jump_at_one = None;
    for n in 1..=horizon {
        if let Some(w) = (0..n_out).find(|&w| a.z.at(n - 1, w).is_one() && a.z_tilde.at(n, w) != a.z.at(n - 1, w)) {
            no_jump_at_one = Some(Witness::new("no_jump_where_z_minus_one", n, w));
            break;
        }
    }
    res.record("no_jump_where_z_minus_one", no_jump_at_one);

    let honest = is_honest(&a, rho);
    let by_set = sup_representing_set(model, rho).is_some();
    res.record("honest_characterization", (honest != by_set).then(|| Witness::new("honest_characterization", rho.at(0), 0)));
    res.honest = honest;

    res.record("z_vanishes_after_r", z_vanishes_after_r(model, &a.z));

    if honest {
        match honest_support_checks(model, &a, rho) {
            Ok(report) => {
                res.variant.record(report.z_or_z_minus_one_in_shadow);
                let wit = (!report.pass()).then(|| report.witness.clone().unwrap_or_else(|| Witness::new("honest_support", 0, 0)));
                res.record("honest_support", wit);
            }
            Err(_) => res.record("honest_support", Some(Witness::new("honest_support", 0, 0))),
        }
        let (times, pairs) = stopping;
        let chosen: Vec<(usize, usize)> = if pairs.len() <= cfg.pair_sample.max(1) * 16 {
            pairs.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(pair_seed);
            (0..cfg.pair_sample).map(|_| pairs[rng.random_range(0..pairs.len())]).collect()
        };
        let mut rel = None;
        for (i, j) in chosen {
            match relative_martingale_check(model, &a, &times[i], &times[j]) {
                Ok(r) if r.pass() => {}
                Ok(r) => {
                    rel = r.witness;
                    break;
                }
                Err(_) => {
                    rel = Some(Witness::new("relative_martingale", 0, 0));
                    break;
                }
            }
        }
        res.record("relative_martingale", rel);
    }

    let infeasible = match mmr_search(model, &a.z, &a.a_opt) {
        Ok(MmrSearch::Infeasible(_)) => None,
        Ok(MmrSearch::Feasible(_)) => Some(Witness::new("mmr_infeasible", horizon, 0)),
        Err(_) => Some(Witness::new("mmr_infeasible", 0, 0)),
    };
    res.record("mmr_infeasible", infeasible);
    res
}

pub fn run_finite_suite(cfg: &SuiteConfig) -> Result<SuiteReport, SuiteError> {
    if cfg.max_periods > MAX_PERIODS {
        return Err(SuiteError::TooManyPeriods(cfg.max_periods));
    }
    if !(2..=3).contains(&cfg.branching) {
        return Err(SuiteError::BadBranching(cfg.branching));
    }
    let mut models = Vec::new();
    let mut stopping = Vec::new();
    let mut cases = Vec::new();
    for periods in 1..=cfg.max_periods {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(periods as u64));
        for (i, (label, model)) in models_for(periods, cfg.branching).into_iter().enumerate() {
            let total = (periods as u128).checked_pow(model.n_outcomes() as u32);
            let exhaustive = i == 0 && total.is_some_and(|t| t <= cfg.exhaustive_limit as u128);
            for rho in random_times(&model, cfg.branching, exhaustive, cfg, &mut rng) {
                cases.push(Case { label: label.clone(), model: models.len(), rho });
            }
            // Stopping times are enumerated only where their count stays small.
            stopping.push(stopping_pairs(&model));
            models.push(model);
        }
    }
    let results: Vec<CaseResult> = cases
        .par_iter()
        .enumerate()
        .map(|(k, c)| check_case(&models[c.model], &c.rho, &stopping[c.model], cfg, cfg.seed ^ (k as u64).wrapping_mul(0x9E37_79B9)))
        .collect();

    let mut checks: BTreeMap<String, Tally> = BTreeMap::new();
    let mut variant = Tally::default();
    let mut witness = None;
    let mut honest_cases = 0;
    for (case, r) in cases.iter().zip(results) {
        for (name, t) in r.checks {
            checks.entry(name.to_string()).or_default().merge(t);
        }
        variant.merge(r.variant);
        honest_cases += usize::from(r.honest);
        if witness.is_none() {
            if let Some(at) = r.witness {
                witness = Some(SuiteWitness { model: case.label.clone(), rho: case.rho.values().to_vec(), at });
            }
        }
    }
    let pass = checks.values().all(|t| t.checked == t.passed);
    Ok(SuiteReport {
        config: cfg.clone(),
        models: models.len(),
        cases: cases.len(),
        honest_cases,
        checks,
        shadow_variant: variant,
        witness,
        pass,
    })
}
