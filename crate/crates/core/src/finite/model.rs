use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational arithmetic for the finite engine.
pub type Q = Ratio<i128>;

pub fn q(num: i128, den: i128) -> Q {
    Q::new(num, den)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("probabilities must be positive and sum to 1")]
    BadProbabilities,
    #[error("partition {period} has {got} labels for {outcomes} outcomes")]
    PartitionSize { period: usize, got: usize, outcomes: usize },
    #[error("partition {period} does not refine partition {}", period - 1)]
    NotRefining { period: usize },
    #[error("process is not adapted at period {period}")]
    NotAdapted { period: usize },
    #[error("random time out of range at outcome {outcome}")]
    TimeOutOfRange { outcome: usize },
    #[error("json: {0}")]
    Json(String),
}

/// Finite outcome space with a filtration of refining partitions `P_0, …, P_N`.
///
/// `cells[n][ω]` is the label of the `P_n`-cell containing `ω`; labels are
/// normalized to `0..k` in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbModel {
    probs: Vec<Q>,
    cells: Vec<Vec<usize>>,
    members: Vec<Vec<Vec<usize>>>,
}

fn normalize(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

impl FiniteProbModel {
    pub fn new(probs: Vec<Q>, partitions: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if probs.is_empty()
            || probs.iter().any(|p| *p <= Q::zero())
            || probs.iter().sum::<Q>() != Q::one()
        {
            return Err(ModelError::BadProbabilities);
        }
        let cells: Vec<Vec<usize>> = partitions.iter().map(|p| normalize(p)).collect();
        for (n, c) in cells.iter().enumerate() {
            if c.len() != probs.len() {
                return Err(ModelError::PartitionSize { period: n, got: c.len(), outcomes: probs.len() });
            }
            if n > 0 {
                for w in 0..probs.len() {
                    for v in 0..w {
                        if c[w] == c[v] && cells[n - 1][w] != cells[n - 1][v] {
                            return Err(ModelError::NotRefining { period: n });
                        }
                    }
                }
            }
        }
        let members = cells
            .iter()
            .map(|c| {
                let k = c.iter().max().map_or(0, |m| m + 1);
                let mut m = vec![Vec::new(); k];
                for (w, &l) in c.iter().enumerate() {
                    m[l].push(w);
                }
                m
            })
            .collect();
        Ok(Self { probs, cells, members })
    }

    /// Tree with `branching` children per node over `periods` steps; `P_n`
    /// groups outcomes by their first `n` moves and `P_0` is trivial.
    ///
    /// `child_probs(prefix)` gives the branch probabilities below the node
    /// reached by `prefix`. Outcomes are enumerated in lexicographic order.
    pub fn tree(
        branching: usize,
        periods: usize,
        child_probs: impl Fn(&[usize]) -> Vec<Q>,
    ) -> Result<Self, ModelError> {
        let outcomes = branching.pow(periods as u32);
        let mut probs = Vec::with_capacity(outcomes);
        for w in 0..outcomes {
            let moves = moves_of(w, branching, periods);
            let mut p = Q::one();
            for n in 0..periods {
                p *= child_probs(&moves[..n])[moves[n]];
            }
            probs.push(p);
        }
        let partitions = (0..=periods)
            .map(|n| (0..outcomes).map(|w| w / branching.pow((periods - n) as u32)).collect())
            .collect();
        Self::new(probs, partitions)
    }

    /// Binary tree where every node moves to branch 0 with probability `p`.
    pub fn homogeneous_binary(periods: usize, p: Q) -> Self {
        Self::tree(2, periods, |_| vec![p, Q::one() - p]).expect("valid binary tree")
    }

    pub fn n_outcomes(&self) -> usize {
        self.probs.len()
    }

    pub fn periods(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn prob(&self, w: usize) -> Q {
        self.probs[w]
    }

    pub fn probs(&self) -> &[Q] {
        &self.probs
    }

    pub fn cell(&self, n: usize, w: usize) -> usize {
        self.cells[n][w]
    }

    pub fn cells(&self, n: usize) -> &[Vec<usize>] {
        &self.members[n]
    }

    pub fn n_cells(&self, n: usize) -> usize {
        self.members[n].len()
    }

    /// `E[x | P_n]` evaluated at every outcome.
    pub fn cond_expect(&self, x: &[Q], n: usize) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.n_outcomes()];
        for members in &self.members[n] {
            let mass: Q = members.iter().map(|&w| self.probs[w]).sum();
            let val: Q = members.iter().map(|&w| self.probs[w] * x[w]).sum::<Q>() / mass;
            for &w in members {
                out[w] = val;
            }
        }
        out
    }

    pub fn expect(&self, x: &[Q]) -> Q {
        self.probs.iter().zip(x).map(|(p, v)| p * v).sum()
    }

    pub fn is_measurable(&self, x: &[Q], n: usize) -> bool {
        self.members[n]
            .iter()
            .all(|m| m.iter().all(|&w| x[w] == x[m[0]]))
    }

    pub fn is_stopping_time(&self, t: &FiniteRandomTime) -> bool {
        (0..=self.periods()).all(|n| {
            self.members[n].iter().all(|m| {
                let hit = t.at(m[0]) == n;
                m.iter().all(|&w| (t.at(w) == n) == hit)
            })
        })
    }

    pub fn to_json(&self, processes: &BTreeMap<String, AdaptedProcess>) -> String {
        let rat = |x: &Q| [*x.numer(), *x.denom()];
        let dto = ModelJson {
            outcomes: self
                .probs
                .iter()
                .map(|p| OutcomeJson { prob_num: *p.numer(), prob_den: *p.denom() })
                .collect(),
            partitions: self.cells.clone(),
            processes: processes
                .iter()
                .map(|(k, v)| (k.clone(), v.values.iter().map(|col| col.iter().map(rat).collect()).collect()))
                .collect(),
        };
        serde_json::to_string(&dto).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<(Self, BTreeMap<String, AdaptedProcess>), ModelError> {
        let dto: ModelJson = serde_json::from_str(s).map_err(|e| ModelError::Json(e.to_string()))?;
        let probs = dto
            .outcomes
            .iter()
            .map(|o| {
                if o.prob_den <= 0 {
                    Err(ModelError::BadProbabilities)
                } else {
                    Ok(q(o.prob_num, o.prob_den))
                }
            })
            .collect::<Result<_, _>>()?;
        let model = Self::new(probs, dto.partitions)?;
        let mut processes = BTreeMap::new();
        for (name, cols) in dto.processes {
            let values = cols
                .into_iter()
                .map(|col| {
                    col.into_iter()
                        .map(|[n, d]| if d == 0 { Err(ModelError::Json("zero denominator".into())) } else { Ok(q(n, d)) })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            processes.insert(name, AdaptedProcess::new(&model, values)?);
        }
        Ok((model, processes))
    }
}

/// Base-`branching` digits of `w`, most significant first.
pub fn moves_of(w: usize, branching: usize, periods: usize) -> Vec<usize> {
    let mut moves = vec![0; periods];
    let mut rest = w;
    for n in (0..periods).rev() {
        moves[n] = rest % branching;
        rest /= branching;
    }
    moves
}

#[derive(Serialize, Deserialize)]
struct OutcomeJson {
    prob_num: i128,
    prob_den: i128,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    outcomes: Vec<OutcomeJson>,
    partitions: Vec<Vec<usize>>,
    #[serde(default)]
    processes: BTreeMap<String, Vec<Vec<[i128; 2]>>>,
}

/// Process with `values[n][ω]`, constant on the cells of `P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess {
    values: Vec<Vec<Q>>,
}

impl AdaptedProcess {
    pub fn new(model: &FiniteProbModel, values: Vec<Vec<Q>>) -> Result<Self, ModelError> {
        if values.len() != model.periods() + 1 {
            return Err(ModelError::NotAdapted { period: values.len() });
        }
        for (n, col) in values.iter().enumerate() {
            if col.len() != model.n_outcomes() || !model.is_measurable(col, n) {
                return Err(ModelError::NotAdapted { period: n });
            }
        }
        Ok(Self { values })
    }

    /// Skips the measurability check; callers build columns from `cond_expect`.
    pub(crate) fn from_columns(values: Vec<Vec<Q>>) -> Self {
        Self { values }
    }

    pub fn zeros(model: &FiniteProbModel) -> Self {
        Self { values: vec![vec![Q::zero(); model.n_outcomes()]; model.periods() + 1] }
    }

    pub fn at(&self, n: usize, w: usize) -> Q {
        self.values[n][w]
    }

    pub fn column(&self, n: usize) -> &[Q] {
        &self.values[n]
    }

    pub fn set(&mut self, n: usize, w: usize, v: Q) {
        self.values[n][w] = v;
    }

    pub fn periods(&self) -> usize {
        self.values.len() - 1
    }

    pub fn increment(&self, n: usize, w: usize) -> Q {
        if n == 0 {
            Q::zero()
        } else {
            self.values[n][w] - self.values[n - 1][w]
        }
    }

    pub fn cumulative(increments: &[Vec<Q>]) -> Self {
        let mut values = Vec::with_capacity(increments.len());
        let mut acc = vec![Q::zero(); increments.first().map_or(0, Vec::len)];
        for col in increments {
            for (a, d) in acc.iter_mut().zip(col) {
                *a += d;
            }
            values.push(acc.clone());
        }
        Self { values }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Q, Q) -> Q) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Self { values }
    }

    /// First period `n ≥ 1` and cell where `E[X_n - X_{n-1} | P_{n-1}] ≠ 0`.
    pub fn martingale_defect(&self, model: &FiniteProbModel) -> Option<(usize, usize)> {
        (1..=self.periods()).find_map(|n| {
            let inc: Vec<Q> = (0..model.n_outcomes()).map(|w| self.increment(n, w)).collect();
            let ce = model.cond_expect(&inc, n - 1);
            ce.iter().position(|v| !v.is_zero()).map(|w| (n, w))
        })
    }
}

/// Random time with values in `{0, …, N}`; not necessarily a stopping time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteRandomTime {
    values: Vec<usize>,
}

impl FiniteRandomTime {
    pub fn new(model: &FiniteProbModel, values: Vec<usize>) -> Result<Self, ModelError> {
        if values.len() != model.n_outcomes() {
            return Err(ModelError::TimeOutOfRange { outcome: values.len() });
        }
        if let Some(w) = values.iter().position(|&v| v > model.periods()) {
            return Err(ModelError::TimeOutOfRange { outcome: w });
        }
        Ok(Self { values })
    }

    pub fn constant(model: &FiniteProbModel, n: usize) -> Result<Self, ModelError> {
        Self::new(model, vec![n; model.n_outcomes()])
    }

    pub fn at(&self, w: usize) -> usize {
        self.values[w]
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }
}
