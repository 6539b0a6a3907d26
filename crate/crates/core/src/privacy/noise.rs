use serde::{Deserialize, Serialize};

use super::DpRng;
use crate::error::{Error, Result};
use crate::tensor::{decomp, Marginal, Residual};

/// Noisy residual `z_τ = ζ_τ + N(0, σ² V_τ)` and its variance `σ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyResidual {
    pub residual: Residual,
    pub variance: f64,
}

/// Add i.i.d. `N(0, variance)` noise to each cell of the marginal over `τ`,
/// then take its top residual.
pub fn measure_residual(m: &Marginal, variance: f64, rng: &mut DpRng) -> Result<NoisyResidual> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "measurement variance must be positive and finite, got {variance}"
        )));
    }
    let std = variance.sqrt();
    let mut noisy = m.clone();
    for v in noisy.values_mut().data_mut() {
        *v += rng.gaussian(std);
    }
    let residual = decomp(&noisy, m.attrs())?;
    Ok(NoisyResidual { residual, variance })
}

/// Exponential mechanism over `scores`, returning the selected index.
///
/// Sampled as `argmax_i ε·score_i / (2Δ) + G_i` with i.i.d. standard Gumbel
/// `G_i`, which has the same distribution as sampling proportional to
/// `exp(ε·score / (2Δ))`. Costs `ε²/8` zCDP; the caller records it.
pub fn exp_mech_select(scores: &[f64], sensitivity: f64, epsilon: f64, rng: &mut DpRng) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if !(epsilon > 0.0) || !(sensitivity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "exponential mechanism needs epsilon > 0 and sensitivity > 0, got {epsilon}, {sensitivity}"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("non-finite score".into()));
    }
    let scale = epsilon / (2.0 * sensitivity);
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &s) in scores.iter().enumerate() {
        let key = scale * s + rng.gumbel();
        if key > best.1 {
            best = (i, key);
        }
    }
    Ok(best.0)
}
