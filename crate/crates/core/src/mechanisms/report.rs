use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::privacy::LedgerEntry;
use crate::tensor::{AttrSet, Marginal};

/// Error summary over the workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean over workload marginals of `‖μ̂_γ - μ_γ‖₁`.
    pub mean_l1: f64,
    /// `mean_l1` divided by the number of records.
    pub mean_l1_normalized: f64,
    pub mean_l2: f64,
    pub max_l1: f64,
}

/// Wall-clock seconds spent per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total: f64,
    pub select: f64,
    pub measure: f64,
    pub update: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRecord {
    /// Number of one-way measurements.
    pub attributes: usize,
    pub sigma_sq: f64,
    /// Cost of one one-way measurement.
    pub rho_per_attribute: f64,
}

/// Noise chosen for one residual in a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub residual: AttrSet,
    /// Share `p_τ x_τ` of the round's measurement budget.
    pub share: f64,
    /// `None` if the measurement was skipped.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Marginal the round measured; `None` for a batch over all residuals.
    pub selected: Option<AttrSet>,
    /// Selection parameter; zero for rounds without a private selection.
    pub epsilon: f64,
    /// Round measurement noise level `σ_t²`.
    pub sigma_sq: f64,
    /// Budget left before the round.
    pub remaining_before: f64,
    /// Total charge of the round.
    pub cost: f64,
    /// Whether the annealing step doubled the budget after this round.
    pub annealed: bool,
    /// Whether this round spent everything that was left.
    pub final_round: bool,
    pub allocations: Vec<Allocation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mechanism: String,
    pub seed: u64,
    pub rho: f64,
    pub rho_used: f64,
    pub ledger: Vec<LedgerEntry>,
    pub init: Option<InitRecord>,
    pub rounds: Vec<RoundRecord>,
    pub timings: Timings,
    pub metrics: Option<crate::mechanisms::Metrics>,
}

/// Estimates for the workload marginals plus the run report.
#[derive(Debug, Clone)]
pub struct MechanismOutput {
    pub estimates: BTreeMap<AttrSet, Marginal>,
    pub report: RunReport,
}
