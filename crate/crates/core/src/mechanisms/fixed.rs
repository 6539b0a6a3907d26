use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    initialize, one_way_attrs, workload_metrics, Allocation, InitRecord, MechanismOutput, RoundRecord, RunReport,
    Timings, TrueMarginals,
};
use crate::crp::{postprocess, solve_crp, CrpProblem, DEFAULT_ETA};
use crate::error::{Error, Result};
use crate::grem::{downward_closure, GremEngine, UpdateMode};
use crate::privacy::{measure_residual, p_tau, v_tau, Accountant, DpRng};
use crate::tensor::{decomp, AttrSet, DataTable, Domain, Marginal};

/// How each marginal of the sequence is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedAllocation {
    /// Isotropic noise on the marginal, then decomposed into residuals.
    Iid,
    /// Residual noise chosen by the per-round allocation problem.
    Crp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedConfig {
    pub update_mode: UpdateMode,
    pub allocation: FixedAllocation,
    pub eta: f64,
    pub audit: bool,
}

impl Default for FixedConfig {
    fn default() -> Self {
        FixedConfig {
            update_mode: UpdateMode::Lazy,
            allocation: FixedAllocation::Iid,
            eta: DEFAULT_ETA,
            audit: false,
        }
    }
}

/// Half the budget on one-way initialization, half split evenly over the
/// marginals of `sequence`, measured in order. Estimates are kept for the
/// distinct marginals of the sequence.
pub fn run_fixed_sequence(
    table: &DataTable,
    sequence: &[AttrSet],
    rho: f64,
    rng: &mut DpRng,
    config: &FixedConfig,
) -> Result<MechanismOutput> {
    if sequence.is_empty() {
        return Err(Error::InvalidParameter("empty measurement sequence".into()));
    }
    let start = Instant::now();
    let domain = table.domain();
    let mut tracked: Vec<AttrSet> = Vec::new();
    for g in sequence {
        domain.check(g)?;
        if !tracked.contains(g) {
            tracked.push(g.clone());
        }
    }
    let closure = downward_closure(&tracked)?;
    let truth = TrueMarginals::compute(table, &closure)?;
    let mut accountant = Accountant::new(rho)?;
    let mut engine = GremEngine::new(domain, &tracked, config.update_mode)?.with_audit(config.audit);
    let mut timings = Timings::default();

    let attrs = one_way_attrs(&closure);
    let init = if attrs.is_empty() {
        None
    } else {
        let sigma0_sq = attrs.len() as f64 / rho;
        initialize(&mut engine, &truth, &attrs, sigma0_sq, &mut accountant, rng)?;
        Some(InitRecord {
            attributes: attrs.len(),
            sigma_sq: sigma0_sq,
            rho_per_attribute: 1.0 / (2.0 * sigma0_sq),
        })
    };

    let sigma_sq = sequence.len() as f64 / rho;
    let round_cost = 1.0 / (2.0 * sigma_sq);
    let mut rounds = Vec::with_capacity(sequence.len());
    for (k, gamma) in sequence.iter().enumerate() {
        let remaining_before = accountant.remaining();
        accountant.compose(format!("measure {gamma}"), round_cost)?;
        let clock = Instant::now();
        let taus = gamma.subsets()?;
        let (measurements, allocations) = match config.allocation {
            FixedAllocation::Iid => measure_iid(domain, truth.get(gamma)?, &taus, sigma_sq, rng)?,
            FixedAllocation::Crp => measure_crp(&engine, &truth, gamma, &taus, sigma_sq, config.eta, rng)?,
        };
        timings.measure += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        for (tau, z, var) in &measurements {
            engine.measure(tau, z.values(), *var)?;
        }
        engine.end_round()?;
        timings.update += clock.elapsed().as_secs_f64();

        rounds.push(RoundRecord {
            round: k + 1,
            selected: Some(gamma.clone()),
            epsilon: 0.0,
            sigma_sq,
            remaining_before,
            cost: round_cost,
            annealed: false,
            final_round: k + 1 == sequence.len(),
            allocations,
        });
    }

    let estimates: BTreeMap<AttrSet, Marginal> = tracked
        .iter()
        .map(|g| (g.clone(), engine.estimate(g).expect("sequence is tracked").clone()))
        .collect();
    let metrics = workload_metrics(&estimates, &truth, &tracked, table.len())?;
    timings.total = start.elapsed().as_secs_f64();
    let mode = match config.update_mode {
        UpdateMode::Lazy => "lazy",
        UpdateMode::Full => "full",
    };
    let alloc = match config.allocation {
        FixedAllocation::Iid => "iid",
        FixedAllocation::Crp => "crp",
    };
    Ok(MechanismOutput {
        estimates,
        report: RunReport {
            mechanism: format!("fixed-{mode}-{alloc}"),
            seed: rng.seed(),
            rho,
            rho_used: accountant.used(),
            ledger: accountant.ledger().to_vec(),
            init,
            rounds,
            timings,
            metrics: Some(metrics),
        },
    })
}

/// Fixed sequence measured with isotropic marginal noise.
pub fn run_iid_fixed(
    table: &DataTable,
    sequence: &[AttrSet],
    rho: f64,
    rng: &mut DpRng,
    mode: UpdateMode,
) -> Result<MechanismOutput> {
    let config = FixedConfig {
        update_mode: mode,
        ..FixedConfig::default()
    };
    run_fixed_sequence(table, sequence, rho, rng, &config)
}

type Measured = (Vec<(AttrSet, crate::tensor::Residual, f64)>, Vec<Allocation>);

/// Add `N(0, σ²)` to every cell of the marginal and decompose; residual `τ`
/// then carries variance `σ² n_{γ\τ}` and a share `p_τ / n_{γ\τ}` of the cost.
fn measure_iid(
    domain: &Domain,
    truth: &Marginal,
    taus: &[AttrSet],
    sigma_sq: f64,
    rng: &mut DpRng,
) -> Result<Measured> {
    let sigma = sigma_sq.sqrt();
    let mut noisy = truth.clone();
    for v in noisy.values_mut().data_mut() {
        *v += rng.gaussian(sigma);
    }
    let gamma = truth.attrs();
    let mut measurements = Vec::with_capacity(taus.len());
    let mut allocations = Vec::with_capacity(taus.len());
    for tau in taus {
        let smear: f64 = gamma.difference(tau).iter().map(|i| domain.size(i) as f64).product();
        let var = sigma_sq * smear;
        measurements.push((tau.clone(), decomp(&noisy, tau)?, var));
        allocations.push(Allocation {
            residual: tau.clone(),
            share: p_tau(domain, tau) / smear,
            variance: Some(var),
        });
    }
    Ok((measurements, allocations))
}

fn measure_crp(
    engine: &GremEngine,
    truth: &TrueMarginals,
    gamma: &AttrSet,
    taus: &[AttrSet],
    sigma_sq: f64,
    eta: f64,
    rng: &mut DpRng,
) -> Result<Measured> {
    let domain = engine.store().domain();
    let c = 1.0 / sigma_sq;
    let problem = CrpProblem::new(
        taus.iter()
            .map(|tau| v_tau(domain, gamma, tau))
            .collect::<Result<_>>()?,
        taus.iter().map(|tau| p_tau(domain, tau)).collect(),
        taus.iter().map(|tau| engine.store().precision(tau) / c).collect(),
    )?;
    let solution = solve_crp(&problem)?;
    let retained = postprocess(&problem, &solution, eta, c)?;
    let mut measurements = Vec::with_capacity(retained.len());
    for r in &retained {
        let tau = &taus[r.index];
        let z = measure_residual(truth.get(tau)?, r.variance, rng)?;
        measurements.push((tau.clone(), z.residual, r.variance));
    }
    let allocations = taus
        .iter()
        .enumerate()
        .map(|(i, tau)| Allocation {
            residual: tau.clone(),
            share: problem.p[i] * solution.x[i],
            variance: retained.iter().find(|r| r.index == i).map(|r| r.variance),
        })
        .collect();
    Ok((measurements, allocations))
}
