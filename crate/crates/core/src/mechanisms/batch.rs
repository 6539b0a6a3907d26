use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{workload_metrics, Allocation, MechanismOutput, RoundRecord, RunReport, Timings, TrueMarginals};
use crate::crp::{aggregate_workload_weights, postprocess, solve_crp, CrpProblem, DEFAULT_ETA};
use crate::error::Result;
use crate::grem::{GremEngine, UpdateMode, Workload};
use crate::privacy::{measure_residual, p_tau, Accountant, DpRng};
use crate::tensor::{AttrSet, DataTable, Marginal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub eta: f64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { eta: DEFAULT_ETA }
    }
}

/// Non-adaptive baseline: allocate the whole budget across every residual in
/// the workload closure at once, weighting each residual by the error it adds
/// to the workload, and measure each retained residual once.
pub fn run_batch_planner(
    table: &DataTable,
    workload: &Workload,
    rho: f64,
    rng: &mut DpRng,
    config: &BatchConfig,
) -> Result<MechanismOutput> {
    let start = Instant::now();
    let domain = table.domain();
    workload.check(domain)?;
    let mut accountant = Accountant::new(rho)?;
    let closure = workload.closure().to_vec();
    let truth = TrueMarginals::compute(table, &closure)?;
    let mut timings = Timings::default();

    let clock = Instant::now();
    let weights = aggregate_workload_weights(workload.sets(), domain)?;
    let taus: Vec<AttrSet> = weights.keys().cloned().collect();
    let problem = CrpProblem::without_priors(
        weights.values().cloned().collect(),
        taus.iter().map(|t| p_tau(domain, t)).collect(),
    )?;
    let c = 2.0 * rho;
    let solution = solve_crp(&problem)?;
    let retained = postprocess(&problem, &solution, config.eta, c)?;
    let mut measurements = Vec::with_capacity(retained.len());
    let mut cost = 0.0;
    for r in &retained {
        let tau = &taus[r.index];
        let share = problem.p[r.index] / (2.0 * r.variance);
        accountant.compose(format!("measure {tau}"), share)?;
        cost += share;
        let z = measure_residual(truth.get(tau)?, r.variance, rng)?;
        measurements.push((tau.clone(), z.residual, r.variance));
    }
    timings.measure = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut engine = GremEngine::new(domain, workload.sets(), UpdateMode::Full)?;
    for (tau, z, var) in &measurements {
        engine.measure(tau, z.values(), *var)?;
    }
    engine.end_round()?;
    timings.update = clock.elapsed().as_secs_f64();

    let allocations = taus
        .iter()
        .enumerate()
        .map(|(i, tau)| Allocation {
            residual: tau.clone(),
            share: problem.p[i] * solution.x[i],
            variance: retained.iter().find(|r| r.index == i).map(|r| r.variance),
        })
        .collect();
    let round = RoundRecord {
        round: 1,
        selected: None,
        epsilon: 0.0,
        sigma_sq: 1.0 / c,
        remaining_before: rho,
        cost,
        annealed: false,
        final_round: true,
        allocations,
    };

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
            mechanism: "batch-planner".into(),
            seed: rng.seed(),
            rho,
            rho_used: accountant.used(),
            ledger: accountant.ledger().to_vec(),
            init: None,
            rounds: vec![round],
            timings,
            metrics: Some(metrics),
        },
    })
}
