use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use super::analysis::AzemaAnalysis;
use super::model::{AdaptedProcess, FiniteProbModel, FiniteRandomTime, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MmrError {
    #[error("Z_0 must be 1 on every outcome")]
    ZStartsBelowOne,
    #[error("Z_N must vanish on every outcome")]
    ZDoesNotVanish,
    #[error("U becomes negative at period {period}, outcome {outcome}")]
    NegativeU { period: usize, outcome: usize },
    #[error("T is not predictable")]
    NotPredictable,
    #[error("xi is negative or not F_T-measurable at outcome {0}")]
    BadXi(usize),
    #[error("E[-dA_T + xi 1(dgamma_T > 0) | P_(T-1)] = {residual} at outcome {outcome}")]
    ModifResidual { outcome: usize, residual: String },
}

/// A cell where `E[ΔA_n | P_{n-1}] > 0` but `{Z_n = 1}` has no mass in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub period: usize,
    /// Representative outcome of the `P_{n-1}`-cell.
    pub outcome: usize,
    pub required: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleCertificate {
    pub violations: Vec<Violation>,
    /// Solves every constraint outside the violating cells.
    pub partial_gamma: AdaptedProcess,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MmrSearch {
    Feasible(AdaptedProcess),
    Infeasible(InfeasibleCertificate),
}

impl MmrSearch {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible(_))
    }
}

/// Looks for adapted `Δγ_n ≥ 0`, zero off `{Z_n = 1}`, with
/// `E[Δγ_n - ΔA_n | P_{n-1}] = 0` for every `n ≥ 1`.
///
/// The constraints split over the cells of `P_{n-1}`: a cell needing mass
/// `E[ΔA_n | P_{n-1}] > 0` is solvable iff it contains a `P_n`-cell with
/// `Z_n = 1`, and then spreading the mass evenly over those cells solves it.
pub fn mmr_search(
    model: &FiniteProbModel,
    z: &AdaptedProcess,
    a: &AdaptedProcess,
) -> Result<MmrSearch, MmrError> {
    let horizon = model.periods();
    if !z.column(0).iter().all(Q::is_one) {
        return Err(MmrError::ZStartsBelowOne);
    }
    if !z.column(horizon).iter().all(Q::is_zero) {
        return Err(MmrError::ZDoesNotVanish);
    }
    let n_out = model.n_outcomes();
    let mut increments = vec![vec![Q::zero(); n_out]];
    let mut violations = Vec::new();
    for n in 1..=horizon {
        let da: Vec<Q> = (0..n_out).map(|w| a.increment(n, w)).collect();
        let required = model.cond_expect(&da, n - 1);
        let mut dg = vec![Q::zero(); n_out];
        for members in model.cells(n - 1) {
            let need = required[members[0]];
            if need.is_zero() {
                continue;
            }
            let admissible: Vec<usize> = members.iter().copied().filter(|&w| z.at(n, w).is_one()).collect();
            if admissible.is_empty() {
                violations.push(Violation { period: n, outcome: members[0], required: need.to_string() });
                continue;
            }
            let mass: Q = members.iter().map(|&w| model.prob(w)).sum();
            let good: Q = admissible.iter().map(|&w| model.prob(w)).sum();
            let level = need * mass / good;
            for w in admissible {
                dg[w] = level;
            }
        }
        increments.push(dg);
    }
    let gamma = AdaptedProcess::cumulative(&increments);
    Ok(if violations.is_empty() {
        MmrSearch::Feasible(gamma)
    } else {
        MmrSearch::Infeasible(InfeasibleCertificate { violations, partial_gamma: gamma })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmrConstruction {
    pub u: AdaptedProcess,
    pub u_star: AdaptedProcess,
    /// `Z = U/U*` on every outcome and period.
    pub ratio_matches: bool,
    /// `U` is an exact martingale.
    pub u_martingale: bool,
}

impl MmrConstruction {
    pub fn represents(&self) -> bool {
        self.ratio_matches && self.u_martingale
    }
}

/// `U_n = U_{n-1} + U*_{n-1}(ΔZ_n + Δγ_n)`, `U_0 = 1`, `U*_n = max(U*_{n-1}, U_n)`.
pub fn mmr_construct(
    model: &FiniteProbModel,
    z: &AdaptedProcess,
    gamma: &AdaptedProcess,
) -> Result<MmrConstruction, MmrError> {
    let horizon = model.periods();
    let n_out = model.n_outcomes();
    let mut u = vec![vec![Q::one(); n_out]];
    let mut u_star = vec![vec![Q::one(); n_out]];
    for n in 1..=horizon {
        let mut col = vec![Q::zero(); n_out];
        let mut star = vec![Q::zero(); n_out];
        for w in 0..n_out {
            let drive = z.increment(n, w) + gamma.increment(n, w);
            let v = u[n - 1][w] + u_star[n - 1][w] * drive;
            if v < Q::zero() {
                return Err(MmrError::NegativeU { period: n, outcome: w });
            }
            col[w] = v;
            star[w] = v.max(u_star[n - 1][w]);
        }
        u.push(col);
        u_star.push(star);
    }
    let u = AdaptedProcess::from_columns(u);
    let u_star = AdaptedProcess::from_columns(u_star);
    let ratio_matches = (0..=horizon).all(|n| (0..n_out).all(|w| z.at(n, w) * u_star.at(n, w) == u.at(n, w)));
    let u_martingale = u.martingale_defect(model).is_none();
    Ok(MmrConstruction { u, u_star, ratio_matches, u_martingale })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifOutcome {
    pub gamma_hat: AdaptedProcess,
    pub nondecreasing: bool,
    pub supported_on_z_one: bool,
    pub martingale: bool,
    /// `-A + γ̂` has the same martingale defects as `-A + γ`.
    pub defects_preserved: bool,
}

fn defects(model: &FiniteProbModel, x: &AdaptedProcess) -> Vec<Vec<Q>> {
    (1..=x.periods())
        .map(|n| {
            let inc: Vec<Q> = (0..model.n_outcomes()).map(|w| x.increment(n, w)).collect();
            model.cond_expect(&inc, n - 1)
        })
        .collect()
}

/// Replaces the jump of `γ` at the predictable time `T` by `ξ·1_{Δγ_T > 0}`.
pub fn modif_predictable(
    model: &FiniteProbModel,
    analysis: &AzemaAnalysis,
    gamma: &AdaptedProcess,
    t: &FiniteRandomTime,
    xi: &[Q],
) -> Result<ModifOutcome, MmrError> {
    let horizon = model.periods();
    let n_out = model.n_outcomes();
    // Predictable: T ≥ 1 and {T = n} is P_{n-1}-measurable.
    let predictable = (0..n_out).all(|w| t.at(w) >= 1)
        && (1..=horizon).all(|n| {
            model.cells(n - 1).iter().all(|m| m.iter().all(|&w| (t.at(w) == n) == (t.at(m[0]) == n)))
        });
    if !predictable {
        return Err(MmrError::NotPredictable);
    }
    for w in 0..n_out {
        let n = t.at(w);
        let same_cell = (0..n_out).filter(|&v| model.cell(n, v) == model.cell(n, w));
        if xi[w] < Q::zero() || same_cell.into_iter().any(|v| xi[v] != xi[w]) {
            return Err(MmrError::BadXi(w));
        }
    }
    let jump_t: Vec<Q> = (0..n_out).map(|w| gamma.increment(t.at(w), w)).collect();
    for n in 1..=horizon {
        let integrand: Vec<Q> = (0..n_out)
            .map(|w| {
                if t.at(w) != n {
                    return Q::zero();
                }
                let kept = if jump_t[w] > Q::zero() { xi[w] } else { Q::zero() };
                kept - analysis.a_opt.increment(n, w)
            })
            .collect();
        let ce = model.cond_expect(&integrand, n - 1);
        if let Some(w) = (0..n_out).find(|&w| t.at(w) == n && !ce[w].is_zero()) {
            return Err(MmrError::ModifResidual { outcome: w, residual: ce[w].to_string() });
        }
    }
    let values = (0..=horizon)
        .map(|n| {
            (0..n_out)
                .map(|w| {
                    let mut v = gamma.at(n, w);
                    if n >= t.at(w) {
                        v -= jump_t[w];
                        if jump_t[w] > Q::zero() {
                            v += xi[w];
                        }
                    }
                    v
                })
                .collect()
        })
        .collect();
    let gamma_hat = AdaptedProcess::from_columns(values);
    let nondecreasing = (1..=horizon).all(|n| (0..n_out).all(|w| gamma_hat.increment(n, w) >= Q::zero()));
    let supported_on_z_one = (1..=horizon)
        .all(|n| (0..n_out).all(|w| gamma_hat.increment(n, w).is_zero() || analysis.z.at(n, w).is_one()));
    let before = gamma.zip_with(&analysis.a_opt, |g, a| g - a);
    let after = gamma_hat.zip_with(&analysis.a_opt, |g, a| g - a);
    Ok(ModifOutcome {
        martingale: after.martingale_defect(model).is_none(),
        defects_preserved: defects(model, &before) == defects(model, &after),
        gamma_hat,
        nondecreasing,
        supported_on_z_one,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::analysis::azema_analysis;
    use crate::finite::model::q;

    fn coin(periods: usize) -> FiniteProbModel {
        FiniteProbModel::homogeneous_binary(periods, q(1, 2))
    }

    #[test]
    fn deterministic_time_is_infeasible() {
        let m = coin(1);
        let rho = FiniteRandomTime::constant(&m, 1).unwrap();
        let a = azema_analysis(&m, &rho);
        match mmr_search(&m, &a.z, &a.a_opt).unwrap() {
            MmrSearch::Infeasible(cert) => {
                assert_eq!(cert.violations, vec![Violation { period: 1, outcome: 0, required: "1".into() }]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_valued_time_fails_at_second_step() {
        let m = FiniteProbModel::new(vec![q(1, 2), q(1, 2)], vec![vec![0, 0], vec![0, 1], vec![0, 1]]).unwrap();
        let rho = FiniteRandomTime::new(&m, vec![1, 2]).unwrap();
        let a = azema_analysis(&m, &rho);
        let MmrSearch::Infeasible(cert) = mmr_search(&m, &a.z, &a.a_opt).unwrap() else { panic!() };
        assert!(cert.violations.iter().any(|v| v.period == 2 && v.outcome == 1 && v.required == "1"));
    }

    #[test]
    fn search_preconditions() {
        let m = coin(1);
        let rho = FiniteRandomTime::new(&m, vec![0, 1]).unwrap();
        let a = azema_analysis(&m, &rho);
        assert_eq!(mmr_search(&m, &a.z, &a.a_opt), Err(MmrError::ZStartsBelowOne));
    }

    #[test]
    fn construct_with_flat_z() {
        // Z = 1 until the last period, γ = 0: U* stays 1 and U = Z.
        let m = coin(3);
        let rho = FiniteRandomTime::constant(&m, 3).unwrap();
        let a = azema_analysis(&m, &rho);
        let out = mmr_construct(&m, &a.z, &AdaptedProcess::zeros(&m)).unwrap();
        assert_eq!(out.u, a.z);
        assert!(out.ratio_matches);
        // U drops 1 → 0 deterministically, so it is not a martingale.
        assert!(!out.u_martingale);
    }

    #[test]
    fn construct_half_then_zero_is_rejected() {
        let m = coin(2);
        let z = AdaptedProcess::new(&m, vec![vec![q(1, 1); 4], vec![q(1, 2); 4], vec![q(0, 1); 4]]).unwrap();
        let out = mmr_construct(&m, &z, &AdaptedProcess::zeros(&m)).unwrap();
        assert_eq!(out.u.column(1), &[q(1, 2); 4]);
        assert_eq!(out.u.column(2), &[q(0, 1); 4]);
        // Unrolling gives U/U* = (1, 1/2, 0) = Z, but U loses half its mass each step.
        assert!(out.ratio_matches);
        assert!(!out.represents());
    }

    #[test]
    fn construct_reports_negative_u() {
        let m = coin(1);
        let z = AdaptedProcess::new(&m, vec![vec![q(1, 1); 2], vec![q(0, 1); 2]]).unwrap();
        let g = AdaptedProcess::new(&m, vec![vec![q(0, 1); 2], vec![q(-1, 2); 2]]).unwrap();
        assert_eq!(mmr_construct(&m, &z, &g), Err(MmrError::NegativeU { period: 1, outcome: 0 }));
    }

    #[test]
    fn geometric_time_analogue() {
        // ρ = first period with heads, capped at N: Z_n = 1_{ρ > n}, A jumps at ρ.
        let periods = 4;
        let m = coin(periods);
        let rho: Vec<usize> = (0..m.n_outcomes())
            .map(|w| {
                let moves = crate::finite::model::moves_of(w, 2, periods);
                moves.iter().position(|&b| b == 0).map_or(periods, |i| i + 1)
            })
            .collect();
        let rho = FiniteRandomTime::new(&m, rho).unwrap();
        let a = azema_analysis(&m, &rho);
        let MmrSearch::Infeasible(cert) = mmr_search(&m, &a.z, &a.a_opt).unwrap() else { panic!() };
        // Before the last period the compensator 1/2 per step lives on {Z_n = 1}.
        assert_eq!(cert.violations.iter().map(|v| v.period).collect::<Vec<_>>(), vec![periods]);
        let out = mmr_construct(&m, &a.z, &cert.partial_gamma).unwrap();
        // On the all-tails outcome U doubles while Z stays 1: U = 2^n = U*.
        let last = m.n_outcomes() - 1;
        for n in 0..periods {
            assert_eq!(out.u.at(n, last), q(2i128.pow(n as u32), 1));
            assert_eq!(out.u_star.at(n, last), out.u.at(n, last));
        }
        assert!(out.ratio_matches);
        assert!(!out.u_martingale);
    }

    #[test]
    fn modif_identity_and_trivial_cases() {
        let periods = 3;
        let m = coin(periods);
        let rho: Vec<usize> = (0..m.n_outcomes())
            .map(|w| {
                let moves = crate::finite::model::moves_of(w, 2, periods);
                moves.iter().position(|&b| b == 0).map_or(periods, |i| i + 1)
            })
            .collect();
        let rho = FiniteRandomTime::new(&m, rho).unwrap();
        let a = azema_analysis(&m, &rho);
        let MmrSearch::Infeasible(cert) = mmr_search(&m, &a.z, &a.a_opt).unwrap() else { panic!() };
        let gamma = cert.partial_gamma;
        let t = FiniteRandomTime::constant(&m, 2).unwrap();
        let xi: Vec<Q> = (0..m.n_outcomes()).map(|w| gamma.increment(2, w)).collect();
        let out = modif_predictable(&m, &a, &gamma, &t, &xi).unwrap();
        assert_eq!(out.gamma_hat, gamma);
        assert!(out.nondecreasing && out.supported_on_z_one && out.defects_preserved);
        // The last period is infeasible, so -A + γ is not a martingale either way.
        assert!(!out.martingale);

        let wrong = vec![q(3, 1); m.n_outcomes()];
        assert!(matches!(modif_predictable(&m, &a, &gamma, &t, &wrong), Err(MmrError::ModifResidual { .. })));
    }

    #[test]
    fn modif_without_jump_keeps_gamma() {
        let m = coin(2);
        let rho = FiniteRandomTime::constant(&m, 2).unwrap();
        let a = azema_analysis(&m, &rho);
        let gamma = AdaptedProcess::zeros(&m);
        let t = FiniteRandomTime::constant(&m, 1).unwrap();
        let xi = vec![q(5, 1); 4];
        let out = modif_predictable(&m, &a, &gamma, &t, &xi).unwrap();
        assert_eq!(out.gamma_hat, gamma);
    }

    #[test]
    fn modif_rejects_unpredictable_time() {
        let m = coin(2);
        let rho = FiniteRandomTime::constant(&m, 2).unwrap();
        let a = azema_analysis(&m, &rho);
        let t = FiniteRandomTime::new(&m, vec![1, 1, 2, 2]).unwrap();
        let out = modif_predictable(&m, &a, &AdaptedProcess::zeros(&m), &t, &[q(0, 1); 4]);
        assert_eq!(out, Err(MmrError::NotPredictable));
    }
}
