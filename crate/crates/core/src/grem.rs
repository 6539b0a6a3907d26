//! Residual estimate store and marginal reconstruction.
//!
//! Each residual `τ` in the downward closure of the workload keeps an
//! inverse-variance weighted estimate `z_τ` with precision `λ_τ`; unmeasured
//! residuals are the zero array with `λ_τ = 0`. A marginal estimate is the sum
//! of the reconstructed components of its residuals, and since reconstruction
//! is linear a change to one `z_τ` only has to be pushed into the marginals
//! that contain `τ`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{decomp, recon, AttrSet, Domain, Marginal, NdArray, Residual};

/// Target marginals and their downward closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    sets: Vec<AttrSet>,
    closure: Vec<AttrSet>,
}

impl Workload {
    pub fn new(sets: impl IntoIterator<Item = AttrSet>) -> Result<Self> {
        let sets: Vec<AttrSet> = sets.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if sets.is_empty() {
            return Err(Error::InvalidParameter("empty workload".into()));
        }
        Ok(Workload {
            closure: downward_closure(&sets)?,
            sets,
        })
    }

    /// All `k`-way marginals of the domain.
    pub fn all_k_way(domain: &Domain, k: usize) -> Result<Self> {
        if k == 0 || k > domain.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot build {k}-way workload over {} attributes",
                domain.len()
            )));
        }
        let all = AttrSet::new((0..domain.len()).collect());
        let sets = all.subsets()?.into_iter().filter(|s| s.len() == k);
        Workload::new(sets)
    }

    pub fn sets(&self) -> &[AttrSet] {
        &self.sets
    }

    /// Downward closure, ordered by size then lexicographically.
    pub fn closure(&self) -> &[AttrSet] {
        &self.closure
    }

    pub fn check(&self, domain: &Domain) -> Result<()> {
        self.sets.iter().try_for_each(|s| domain.check(s))
    }
}

/// `{τ ⊆ γ : γ ∈ sets}`, ordered by size then lexicographically.
pub fn downward_closure(sets: &[AttrSet]) -> Result<Vec<AttrSet>> {
    let mut all = BTreeSet::new();
    for g in sets {
        all.extend(g.subsets()?);
    }
    let mut v: Vec<AttrSet> = all.into_iter().collect();
    v.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(v)
}

/// Consolidated estimate of one residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEstimate {
    pub z: NdArray,
    /// Sum of the inverse variances of all measurements folded in.
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEstimateStore {
    domain: Domain,
    entries: BTreeMap<AttrSet, ResidualEstimate>,
}

impl ResidualEstimateStore {
    /// Store with every key unmeasured.
    pub fn new(domain: &Domain, keys: &[AttrSet]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for k in keys {
            domain.check(k)?;
            entries.insert(
                k.clone(),
                ResidualEstimate {
                    z: NdArray::zeros(domain.residual_shape(k)),
                    precision: 0.0,
                },
            );
        }
        Ok(ResidualEstimateStore {
            domain: domain.clone(),
            entries,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn get(&self, tau: &AttrSet) -> Option<&ResidualEstimate> {
        self.entries.get(tau)
    }

    pub fn precision(&self, tau: &AttrSet) -> f64 {
        self.entries.get(tau).map_or(0.0, |e| e.precision)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AttrSet, &ResidualEstimate)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Current estimate of `τ` as a [`Residual`]; zero if never measured.
    pub fn residual(&self, tau: &AttrSet) -> Result<Residual> {
        match self.entries.get(tau) {
            Some(e) => Residual::new(&self.domain, tau.clone(), e.z.clone()),
            None => Residual::zeros(&self.domain, tau.clone()),
        }
    }

    /// Fold a new measurement of `τ` into its inverse-variance weighted
    /// average. Returns the change `z'_τ - z_τ` of the consolidated estimate.
    pub fn consolidate(&mut self, tau: &AttrSet, z_new: &NdArray, variance: f64) -> Result<Residual> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "measurement variance must be positive and finite, got {variance}"
            )));
        }
        let expected = self.domain.residual_shape(tau);
        if z_new.shape() != expected.as_slice() {
            return Err(Error::ShapeMismatch {
                expected,
                found: z_new.shape().to_vec(),
            });
        }
        let entry = self.entries.entry(tau.clone()).or_insert_with(|| ResidualEstimate {
            z: NdArray::zeros(expected),
            precision: 0.0,
        });
        let w_new = 1.0 / variance;
        let total = entry.precision + w_new;
        let mut delta = NdArray::zeros(z_new.shape().to_vec());
        for ((z, d), x) in entry.z.data_mut().iter_mut().zip(delta.data_mut()).zip(z_new.data()) {
            let updated = (entry.precision * *z + w_new * x) / total;
            *d = updated - *z;
            *z = updated;
        }
        entry.precision = total;
        Residual::new(&self.domain, tau.clone(), delta)
    }
}

/// Marginal estimates for a fixed family of attribute sets, plus an index from
/// each residual to the tracked marginals containing it.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEstimateSet {
    estimates: BTreeMap<AttrSet, Marginal>,
    supersets: HashMap<AttrSet, Vec<AttrSet>>,
}

impl MarginalEstimateSet {
    pub fn get(&self, gamma: &AttrSet) -> Option<&Marginal> {
        self.estimates.get(gamma)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AttrSet, &Marginal)> {
        self.estimates.iter()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// Tracked marginals containing `tau`.
    pub fn supersets_of(&self, tau: &AttrSet) -> &[AttrSet] {
        self.supersets.get(tau).map_or(&[], Vec::as_slice)
    }

    /// Largest absolute cell difference against another estimate set over the
    /// same attribute sets.
    pub fn max_abs_diff(&self, other: &MarginalEstimateSet) -> Result<f64> {
        let mut worst = 0.0f64;
        for (g, m) in &self.estimates {
            let o = other
                .estimates
                .get(g)
                .ok_or_else(|| Error::MissingResidual(g.as_slice().to_vec()))?;
            worst = worst.max(m.values().max_abs_diff(o.values())?);
        }
        Ok(worst)
    }

    pub fn into_map(self) -> BTreeMap<AttrSet, Marginal> {
        self.estimates
    }
}

/// Rebuild every tracked marginal from scratch:
/// `μ̂_γ = Σ_{τ⊆γ} recon(z_τ, τ, γ)`, unmeasured residuals contributing zero.
pub fn reconstruct_workload(
    store: &ResidualEstimateStore,
    tracked: &[AttrSet],
    domain: &Domain,
) -> Result<MarginalEstimateSet> {
    let mut estimates = BTreeMap::new();
    let mut supersets: HashMap<AttrSet, Vec<AttrSet>> = HashMap::new();
    for gamma in tracked {
        if estimates.contains_key(gamma) {
            continue;
        }
        let mut est = Marginal::zeros(domain, gamma.clone())?;
        for tau in gamma.subsets()? {
            if let Some(e) = store.get(&tau) {
                if e.precision > 0.0 {
                    let r = Residual::new(domain, tau.clone(), e.z.clone())?;
                    est.values_mut().add_assign(recon(&r, gamma, domain)?.values())?;
                }
            }
            supersets.entry(tau).or_default().push(gamma.clone());
        }
        estimates.insert(gamma.clone(), est);
    }
    Ok(MarginalEstimateSet { estimates, supersets })
}

/// Push a change `delta = z'_τ - z_τ` into every tracked marginal containing
/// `τ`; other marginals are untouched.
pub fn lazy_update(estimates: &mut MarginalEstimateSet, delta: &Residual, domain: &Domain) -> Result<()> {
    if delta.values().is_zero() {
        return Ok(());
    }
    let targets = match estimates.supersets.get(delta.attrs()) {
        Some(t) => t.clone(),
        None => return Ok(()),
    };
    for gamma in targets {
        let comp = recon(delta, &gamma, domain)?;
        let est = estimates
            .estimates
            .get_mut(&gamma)
            .expect("superset index only names tracked marginals");
        est.values_mut().add_assign(comp.values())?;
    }
    Ok(())
}

/// How marginal estimates are kept current after new measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    /// Incremental update of the affected marginals after each measurement.
    Lazy,
    /// Full reconstruction of all tracked marginals at the end of each round.
    Full,
}

/// Residual store plus tracked marginal estimates, kept in sync.
#[derive(Debug, Clone)]
pub struct GremEngine {
    domain: Domain,
    store: ResidualEstimateStore,
    tracked: Vec<AttrSet>,
    estimates: MarginalEstimateSet,
    mode: UpdateMode,
    audit: bool,
    dirty: bool,
}

/// Tolerance of the full-rebuild audit, relative to the largest estimate.
pub const AUDIT_TOLERANCE: f64 = 1e-8;

impl GremEngine {
    /// Engine tracking `tracked` marginals with a store over their downward closure.
    pub fn new(domain: &Domain, tracked: &[AttrSet], mode: UpdateMode) -> Result<Self> {
        let closure = downward_closure(tracked)?;
        let store = ResidualEstimateStore::new(domain, &closure)?;
        let estimates = reconstruct_workload(&store, tracked, domain)?;
        Ok(GremEngine {
            domain: domain.clone(),
            store,
            tracked: tracked.to_vec(),
            estimates,
            mode,
            audit: false,
            dirty: false,
        })
    }

    /// Compare against a from-scratch rebuild at every round end.
    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn mode(&self) -> UpdateMode {
        self.mode
    }

    pub fn store(&self) -> &ResidualEstimateStore {
        &self.store
    }

    pub fn estimates(&self) -> &MarginalEstimateSet {
        &self.estimates
    }

    pub fn estimate(&self, gamma: &AttrSet) -> Option<&Marginal> {
        self.estimates.get(gamma)
    }

    /// Consolidate a measurement and, in lazy mode, update the affected marginals.
    pub fn measure(&mut self, tau: &AttrSet, z: &NdArray, variance: f64) -> Result<()> {
        let delta = self.store.consolidate(tau, z, variance)?;
        match self.mode {
            UpdateMode::Lazy => lazy_update(&mut self.estimates, &delta, &self.domain)?,
            UpdateMode::Full => self.dirty = true,
        }
        Ok(())
    }

    /// Close a round of measurements: rebuild in full mode, audit if enabled.
    pub fn end_round(&mut self) -> Result<()> {
        if self.mode == UpdateMode::Full && self.dirty {
            self.estimates = reconstruct_workload(&self.store, &self.tracked, &self.domain)?;
            self.dirty = false;
        }
        if self.audit {
            let fresh = reconstruct_workload(&self.store, &self.tracked, &self.domain)?;
            let diff = self.estimates.max_abs_diff(&fresh)?;
            let scale = fresh.iter().map(|(_, m)| m.values().max_abs()).fold(1.0f64, f64::max);
            if diff > AUDIT_TOLERANCE * scale {
                return Err(Error::Solver(format!(
                    "lazy estimates diverged from full rebuild by {diff}"
                )));
            }
        }
        Ok(())
    }

    /// Largest `|decomp(μ̂_γ, τ) - z_τ|` over measured `τ ⊆ γ`, tracked `γ`.
    pub fn consistency_error(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (gamma, est) in self.estimates.iter() {
            for tau in gamma.subsets()? {
                if let Some(e) = self.store.get(&tau) {
                    if e.precision > 0.0 {
                        let r = decomp(est, &tau)?;
                        worst = worst.max(r.values().max_abs_diff(&e.z)?);
                    }
                }
            }
        }
        Ok(worst)
    }
}
