use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    initialize, one_way_attrs, workload_metrics, Allocation, InitRecord, MechanismOutput, RoundRecord, RunReport,
    Timings, TrueMarginals,
};
use crate::crp::{postprocess, solve_crp, CrpProblem, DEFAULT_ETA};
use crate::error::{Error, Result};
use crate::grem::{GremEngine, UpdateMode, Workload};
use crate::privacy::{exp_mech_select, measure_residual, p_tau, v_tau, Accountant, DpRng};
use crate::tensor::{AttrSet, DataTable, Marginal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AimConfig {
    /// Minimum budget share for a residual to be measured.
    pub eta: f64,
    /// Score sensitivity for selection; defaults to the largest candidate weight.
    pub sensitivity: Option<f64>,
    pub update_mode: UpdateMode,
    /// Check lazy estimates against a full rebuild after every round.
    pub audit: bool,
}

impl Default for AimConfig {
    fn default() -> Self {
        AimConfig {
            eta: DEFAULT_ETA,
            sensitivity: None,
            update_mode: UpdateMode::Lazy,
            audit: false,
        }
    }
}

/// `w_γ = Σ_{π∈W} |γ ∩ π|`.
pub fn selection_weight(gamma: &AttrSet, workload: &[AttrSet]) -> f64 {
    workload.iter().map(|p| gamma.intersection_len(p) as f64).sum()
}

/// `w_γ (‖μ_γ - μ̂_γ‖₁ - √(2/π) σ n_γ)`: expected L1 improvement from
/// measuring `γ` at noise level `σ`.
pub fn selection_score(truth: &Marginal, estimate: &Marginal, sigma: f64, weight: f64) -> Result<f64> {
    let err = truth.values().sub(estimate.values())?.l1_norm();
    let cells = truth.values().len() as f64;
    Ok(weight * (err - (2.0 / std::f64::consts::PI).sqrt() * sigma * cells))
}

/// Next round's selection parameter and noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anneal {
    pub epsilon: f64,
    pub sigma_sq: f64,
    pub doubled: bool,
    /// The next round spends exactly `remaining`.
    pub final_round: bool,
}

/// Double the round budget when the last measurement moved the selected
/// estimate by no more than its expected noise, then spend everything on the
/// next round if fewer than two rounds would still fit.
pub fn budget_anneal(epsilon: f64, sigma_sq: f64, change_l1: f64, cells: usize, remaining: f64) -> Anneal {
    let expected = (2.0 / std::f64::consts::PI).sqrt() * sigma_sq.sqrt() * cells as f64;
    let doubled = change_l1 <= expected;
    let (mut eps, mut s2) = if doubled {
        (2.0 * epsilon, sigma_sq / 4.0)
    } else {
        (epsilon, sigma_sq)
    };
    let final_round = remaining <= 2.0 * (1.0 / (2.0 * s2) + eps * eps / 8.0);
    if final_round {
        eps = (0.8 * remaining).sqrt();
        s2 = 1.0 / (1.8 * remaining);
    }
    Anneal {
        epsilon: eps,
        sigma_sq: s2,
        doubled,
        final_round,
    }
}

/// Adaptive mechanism: one-way initialization, then rounds of private
/// selection over the workload closure, noise allocation for the selected
/// marginal's residuals, measurement, and lazy reconstruction, until the
/// budget `rho` is spent.
pub fn run_aim_grem(
    table: &DataTable,
    workload: &Workload,
    rho: f64,
    rng: &mut DpRng,
    config: &AimConfig,
) -> Result<MechanismOutput> {
    let start = Instant::now();
    let domain = table.domain();
    workload.check(domain)?;
    let mut accountant = Accountant::new(rho)?;
    let closure = workload.closure().to_vec();
    let truth = TrueMarginals::compute(table, &closure)?;
    let mut engine = GremEngine::new(domain, &closure, config.update_mode)?.with_audit(config.audit);
    let mut timings = Timings::default();

    let m = closure.len() as f64;
    let sigma0_sq = m / (0.9 * rho);
    let attrs = one_way_attrs(&closure);
    initialize(&mut engine, &truth, &attrs, sigma0_sq, &mut accountant, rng)?;
    let init = InitRecord {
        attributes: attrs.len(),
        sigma_sq: sigma0_sq,
        rho_per_attribute: 1.0 / (2.0 * sigma0_sq),
    };

    let weights: Vec<f64> = closure.iter().map(|g| selection_weight(g, workload.sets())).collect();
    let sensitivity = match config.sensitivity {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => {
            return Err(Error::InvalidParameter(format!(
                "sensitivity must be positive, got {s}"
            )))
        }
        None => weights.iter().cloned().fold(0.0, f64::max).max(1.0),
    };

    let mut sigma_sq = sigma0_sq;
    let mut epsilon = (0.4 * rho / m).sqrt();
    let mut final_round = false;
    let mut rounds = Vec::new();
    let mut t = attrs.len();
    while accountant.used() < rho {
        t += 1;
        let remaining_before = accountant.remaining();
        let cost_measure = 1.0 / (2.0 * sigma_sq);
        let cost_select = epsilon * epsilon / 8.0;
        if cost_measure + cost_select > remaining_before + crate::privacy::BUDGET_TOLERANCE {
            return Err(Error::BudgetExceeded {
                used: accountant.used(),
                cost: cost_measure + cost_select,
                total: rho,
            });
        }

        let clock = Instant::now();
        let sigma = sigma_sq.sqrt();
        let mut scores = Vec::with_capacity(closure.len());
        for (g, w) in closure.iter().zip(&weights) {
            let est = engine.estimate(g).expect("closure is tracked");
            scores.push(selection_score(truth.get(g)?, est, sigma, *w)?);
        }
        accountant.compose(format!("round {t} select"), cost_select)?;
        let gamma = closure[exp_mech_select(&scores, sensitivity, epsilon, rng)?].clone();
        timings.select += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let taus = gamma.subsets()?;
        let c = 1.0 / sigma_sq;
        let problem = CrpProblem::new(
            taus.iter()
                .map(|tau| v_tau(domain, &gamma, tau))
                .collect::<Result<_>>()?,
            taus.iter().map(|tau| p_tau(domain, tau)).collect(),
            taus.iter().map(|tau| engine.store().precision(tau) / c).collect(),
        )?;
        let solution = solve_crp(&problem)?;
        let retained = postprocess(&problem, &solution, config.eta, c)?;
        accountant.compose(format!("round {t} measure"), cost_measure)?;
        let mut measurements = Vec::with_capacity(retained.len());
        for r in &retained {
            let tau = &taus[r.index];
            let z = measure_residual(truth.get(tau)?, r.variance, rng)?;
            measurements.push((tau.clone(), z.residual, r.variance));
        }
        timings.measure += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let before = engine.estimate(&gamma).expect("closure is tracked").clone();
        for (tau, z, var) in &measurements {
            engine.measure(tau, z.values(), *var)?;
        }
        engine.end_round()?;
        let after = engine.estimate(&gamma).expect("closure is tracked");
        let change = after.values().sub(before.values())?.l1_norm();
        timings.update += clock.elapsed().as_secs_f64();

        let allocations = taus
            .iter()
            .enumerate()
            .map(|(i, tau)| Allocation {
                residual: tau.clone(),
                share: problem.p[i] * solution.x[i],
                variance: retained.iter().find(|r| r.index == i).map(|r| r.variance),
            })
            .collect();
        let mut record = RoundRecord {
            round: t,
            selected: Some(gamma.clone()),
            epsilon,
            sigma_sq,
            remaining_before,
            cost: cost_measure + cost_select,
            annealed: false,
            final_round,
            allocations,
        };
        if final_round {
            rounds.push(record);
            break;
        }
        let next = budget_anneal(epsilon, sigma_sq, change, before.values().len(), accountant.remaining());
        record.annealed = next.doubled;
        rounds.push(record);
        epsilon = next.epsilon;
        sigma_sq = next.sigma_sq;
        final_round = next.final_round;
    }

    let estimates: BTreeMap<AttrSet, Marginal> = workload
        .sets()
        .iter()
        .map(|g| (g.clone(), engine.estimate(g).expect("workload is tracked").clone()))
        .collect();
    let metrics = workload_metrics(&estimates, &truth, workload.sets(), table.len())?;
    timings.total = start.elapsed().as_secs_f64();
    Ok(MechanismOutput {
        estimates,
        report: RunReport {
            mechanism: "aim-grem".into(),
            seed: rng.seed(),
            rho,
            rho_used: accountant.used(),
            ledger: accountant.ledger().to_vec(),
            init: Some(init),
            rounds,
            timings,
            metrics: Some(metrics),
        },
    })
}
