//! Privacy parameters of residual measurements, noise, selection, and zCDP
//! accounting.

mod accountant;
mod conversion;
mod noise;
mod rng;

use serde::{Deserialize, Serialize};

pub use accountant::{Accountant, LedgerEntry, BUDGET_TOLERANCE};
pub use conversion::{calibrate_rho, log_delta_at_order, zcdp_to_delta, MAX_ORDER};
pub use noise::{exp_mech_select, measure_residual, NoisyResidual};
pub use rng::DpRng;

use crate::error::{Error, Result};
use crate::tensor::{AttrSet, Domain};

/// Privacy-cost and variance coefficients of a residual relative to a target
/// marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualParams {
    /// Measuring the residual with variance `σ²` costs `p / (2σ²)` zCDP.
    pub p: f64,
    /// Per-cell variance the residual adds to the target marginal, per unit `σ²`.
    pub v: f64,
}

impl ResidualParams {
    pub fn new(domain: &Domain, gamma: &AttrSet, tau: &AttrSet) -> Result<Self> {
        Ok(ResidualParams {
            p: p_tau(domain, tau),
            v: v_tau(domain, gamma, tau)?,
        })
    }
}

/// `p_τ = Π_{i∈τ} (n_i - 1) / n_i`.
pub fn p_tau(domain: &Domain, tau: &AttrSet) -> f64 {
    tau.iter()
        .map(|i| {
            let n = domain.size(i) as f64;
            (n - 1.0) / n
        })
        .product()
}

/// `v_τ = p_τ · Π_{j∈γ\τ} 1 / n_j²`.
pub fn v_tau(domain: &Domain, gamma: &AttrSet, tau: &AttrSet) -> Result<f64> {
    if !tau.is_subset(gamma) {
        return Err(Error::NotSubset {
            sub: tau.as_slice().to_vec(),
            sup: gamma.as_slice().to_vec(),
        });
    }
    let smear: f64 = gamma
        .difference(tau)
        .iter()
        .map(|j| {
            let n = domain.size(j) as f64;
            1.0 / (n * n)
        })
        .product();
    Ok(p_tau(domain, tau) * smear)
}
