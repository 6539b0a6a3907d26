//! Marginals and residuals as dense arrays over attribute subsets.
//!
//! A marginal over `γ` has one axis of length `n_i` per attribute `i ∈ γ`; a
//! residual over `τ` has one axis of length `n_i - 1` per `i ∈ τ`. Axes are
//! always ordered by attribute index. [`decomp`] maps a marginal to one of its
//! component residuals with `sum`/`sub` axis operations, and [`recon`] maps a
//! residual back to its marginal component with `center`/`smear`.

mod array;
mod domain;
mod table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use array::{apply_axis_op, AxisOp, NdArray};
pub use domain::{AttrSet, Domain, MAX_ENUMERATED_ATTRS};
pub use table::{compute_marginal, DataTable};

use crate::error::{Error, Result};

/// Dense marginal (counts or estimates) over an attribute set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    attrs: AttrSet,
    values: NdArray,
}

/// Dense residual over an attribute set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    attrs: AttrSet,
    values: NdArray,
}

fn expect_shape(expected: Vec<usize>, values: &NdArray) -> Result<()> {
    if values.shape() != expected.as_slice() {
        return Err(Error::ShapeMismatch {
            expected,
            found: values.shape().to_vec(),
        });
    }
    Ok(())
}

impl Marginal {
    pub fn new(domain: &Domain, attrs: AttrSet, values: NdArray) -> Result<Self> {
        domain.check(&attrs)?;
        expect_shape(domain.marginal_shape(&attrs), &values)?;
        Ok(Marginal { attrs, values })
    }

    pub fn zeros(domain: &Domain, attrs: AttrSet) -> Result<Self> {
        domain.cells(&attrs)?;
        let values = NdArray::zeros(domain.marginal_shape(&attrs));
        Ok(Marginal { attrs, values })
    }

    pub fn attrs(&self) -> &AttrSet {
        &self.attrs
    }

    pub fn values(&self) -> &NdArray {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut NdArray {
        &mut self.values
    }

    pub fn into_values(self) -> NdArray {
        self.values
    }
}

impl Residual {
    pub fn new(domain: &Domain, attrs: AttrSet, values: NdArray) -> Result<Self> {
        domain.check(&attrs)?;
        expect_shape(domain.residual_shape(&attrs), &values)?;
        Ok(Residual { attrs, values })
    }

    pub fn zeros(domain: &Domain, attrs: AttrSet) -> Result<Self> {
        domain.check(&attrs)?;
        let values = NdArray::zeros(domain.residual_shape(&attrs));
        Ok(Residual { attrs, values })
    }

    pub fn attrs(&self) -> &AttrSet {
        &self.attrs
    }

    pub fn values(&self) -> &NdArray {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut NdArray {
        &mut self.values
    }

    pub fn into_values(self) -> NdArray {
        self.values
    }
}

/// Residual over `target ⊆ γ` extracted from a marginal over `γ`.
///
/// Sums out `γ \ target` first (shrinking the array), then differences each
/// remaining axis.
pub fn decomp(m: &Marginal, target: &AttrSet) -> Result<Residual> {
    let gamma = &m.attrs;
    if !target.is_subset(gamma) {
        return Err(Error::NotSubset {
            sub: target.as_slice().to_vec(),
            sup: gamma.as_slice().to_vec(),
        });
    }
    let mut arr: Option<NdArray> = None;
    for (axis, a) in gamma.iter().enumerate() {
        if !target.contains(a) {
            let src = arr.as_ref().unwrap_or(&m.values);
            arr = Some(apply_axis_op(src, axis, AxisOp::Sum)?);
        }
    }
    for (axis, a) in gamma.iter().enumerate() {
        if target.contains(a) {
            let src = arr.as_ref().unwrap_or(&m.values);
            arr = Some(apply_axis_op(src, axis, AxisOp::Sub)?);
        }
    }
    let arr = arr.unwrap_or_else(|| m.values.clone());
    let shape: Vec<usize> = gamma
        .iter()
        .zip(arr.shape())
        .filter(|(a, _)| target.contains(*a))
        .map(|(_, &l)| l)
        .collect();
    Ok(Residual {
        attrs: target.clone(),
        values: arr.reshape(shape)?,
    })
}

/// Marginal component over `gamma ⊇ τ` contributed by the residual over `τ`.
pub fn recon(r: &Residual, gamma: &AttrSet, domain: &Domain) -> Result<Marginal> {
    let tau = &r.attrs;
    domain.check(gamma)?;
    expect_shape(domain.residual_shape(tau), &r.values)?;
    let positions = tau.positions_in(gamma)?;

    let mut arr: Option<NdArray> = None;
    for axis in 0..tau.len() {
        let src = arr.as_ref().unwrap_or(&r.values);
        arr = Some(apply_axis_op(src, axis, AxisOp::Center)?);
    }
    let arr = arr.unwrap_or_else(|| r.values.clone());

    // insert singleton axes for γ \ τ; row-major layout is unchanged
    let mut shape = vec![1usize; gamma.len()];
    for (k, &p) in positions.iter().enumerate() {
        shape[p] = arr.shape()[k];
    }
    let mut arr = arr.reshape(shape)?;
    for (axis, a) in gamma.iter().enumerate() {
        if !tau.contains(a) {
            arr = apply_axis_op(&arr, axis, AxisOp::Smear(domain.size(a)))?;
        }
    }
    Ok(Marginal {
        attrs: gamma.clone(),
        values: arr,
    })
}

/// Every component residual of `m`, keyed by attribute subset.
pub fn decompose_full(m: &Marginal) -> Result<BTreeMap<AttrSet, Residual>> {
    m.attrs
        .subsets()?
        .into_iter()
        .map(|tau| decomp(m, &tau).map(|r| (tau, r)))
        .collect()
}

/// Inverse of [`decompose_full`]: sum of the marginal components of all
/// residuals `τ ⊆ gamma`.
pub fn recon_sum(residuals: &BTreeMap<AttrSet, Residual>, gamma: &AttrSet, domain: &Domain) -> Result<Marginal> {
    let mut out = Marginal::zeros(domain, gamma.clone())?;
    for tau in gamma.subsets()? {
        let r = residuals
            .get(&tau)
            .ok_or_else(|| Error::MissingResidual(tau.as_slice().to_vec()))?;
        out.values.add_assign(recon(r, gamma, domain)?.values())?;
    }
    Ok(out)
}
