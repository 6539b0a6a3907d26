//! End-to-end private mechanisms.
//!
//! * [`run_aim_grem`]: adaptive select / measure / reconstruct loop with
//!   per-round residual noise allocation and lazy reconstruction.
//! * [`run_batch_planner`]: one noise allocation over every residual of the
//!   workload closure, measured once.
//! * [`run_fixed_sequence`]: a fixed list of marginals measured in turn, used
//!   to compare lazy against full reconstruction.

mod aim;
mod batch;
mod fixed;
mod report;

use std::collections::BTreeMap;

pub use aim::{budget_anneal, run_aim_grem, selection_score, selection_weight, AimConfig, Anneal};
pub use batch::{run_batch_planner, BatchConfig};
pub use fixed::{run_fixed_sequence, run_iid_fixed, FixedAllocation, FixedConfig};
pub use report::{Allocation, InitRecord, MechanismOutput, Metrics, RoundRecord, RunReport, Timings};

use crate::error::{Error, Result};
use crate::grem::GremEngine;
use crate::privacy::{measure_residual, Accountant, DpRng};
use crate::tensor::{compute_marginal, AttrSet, DataTable, Marginal};

/// True marginals of the data, computed once per attribute set.
#[derive(Debug, Clone)]
pub struct TrueMarginals {
    marginals: BTreeMap<AttrSet, Marginal>,
}

impl TrueMarginals {
    pub fn compute(table: &DataTable, sets: &[AttrSet]) -> Result<Self> {
        let mut marginals = BTreeMap::new();
        for s in sets {
            if !marginals.contains_key(s) {
                marginals.insert(s.clone(), compute_marginal(table, s)?);
            }
        }
        Ok(TrueMarginals { marginals })
    }

    pub fn get(&self, attrs: &AttrSet) -> Result<&Marginal> {
        self.marginals
            .get(attrs)
            .ok_or_else(|| Error::MissingResidual(attrs.as_slice().to_vec()))
    }
}

/// Attributes whose one-way marginal is in the closure, in index order.
pub(crate) fn one_way_attrs(closure: &[AttrSet]) -> Vec<usize> {
    closure
        .iter()
        .filter(|s| s.len() == 1)
        .map(|s| s.as_slice()[0])
        .collect()
}

/// Measure each listed attribute's one-way marginal with variance `σ₀²`,
/// split into its residual `z_{i}` at variance `σ₀²` and a fresh measurement
/// of the total at variance `n_i σ₀²`. Each attribute costs `1/(2σ₀²)`.
pub fn initialize(
    engine: &mut GremEngine,
    truth: &TrueMarginals,
    attrs: &[usize],
    sigma0_sq: f64,
    accountant: &mut Accountant,
    rng: &mut DpRng,
) -> Result<()> {
    if !(sigma0_sq > 0.0) || !sigma0_sq.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "initial variance must be positive, got {sigma0_sq}"
        )));
    }
    let domain = engine.store().domain().clone();
    let empty = AttrSet::empty();
    for &i in attrs {
        let one = AttrSet::singleton(i);
        let n = domain.size(i) as f64;
        accountant.compose(format!("init {}", domain.name(i)), 1.0 / (2.0 * sigma0_sq))?;
        let z = measure_residual(truth.get(&one)?, sigma0_sq, rng)?;
        engine.measure(&one, z.residual.values(), sigma0_sq)?;
        let total = measure_residual(truth.get(&empty)?, n * sigma0_sq, rng)?;
        engine.measure(&empty, total.residual.values(), n * sigma0_sq)?;
    }
    engine.end_round()
}

/// Error of estimated against true marginals over the workload.
pub fn workload_metrics(
    estimates: &BTreeMap<AttrSet, Marginal>,
    truth: &TrueMarginals,
    workload: &[AttrSet],
    records: usize,
) -> Result<Metrics> {
    if workload.is_empty() {
        return Err(Error::InvalidParameter("empty workload".into()));
    }
    let (mut l1_sum, mut l2_sum, mut l1_max) = (0.0, 0.0, 0.0f64);
    for g in workload {
        let est = estimates
            .get(g)
            .ok_or_else(|| Error::MissingResidual(g.as_slice().to_vec()))?;
        let diff = est.values().sub(truth.get(g)?.values())?;
        let l1 = diff.l1_norm();
        l1_sum += l1;
        l2_sum += diff.l2_norm();
        l1_max = l1_max.max(l1);
    }
    let k = workload.len() as f64;
    let mean_l1 = l1_sum / k;
    Ok(Metrics {
        mean_l1,
        mean_l1_normalized: mean_l1 / records.max(1) as f64,
        mean_l2: l2_sum / k,
        max_l1: l1_max,
    })
}
