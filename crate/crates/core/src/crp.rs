//! Per-round noise allocation across the residuals of one marginal.
//!
//! In transformed variables `x_τ = 1/(C σ_τ²)` and `a_τ = λ_τ / C` the problem
//! is
//!
//! ```text
//! minimize   Σ v_τ / (x_τ + a_τ)
//! subject to Σ p_τ x_τ ≤ 1,  x ≥ 0
//! ```
//!
//! On a fixed free set the minimizer has the closed form
//! `x_τ = c·√(v_τ/p_τ) - a_τ` with `c = (1 + Q)/S`. Writing
//! `t_τ = a_τ √(p_τ/v_τ)`, a coordinate is free exactly when `t_τ < c`, and
//! dropping the coordinates with `t_τ ≥ c` can only lower `c`, so the active
//! set only grows and the loop ends after at most one pass per coordinate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::privacy::v_tau;
use crate::tensor::{AttrSet, Domain};

/// Default cutoff on a measurement's share `p_τ x_τ` of the round budget.
pub const DEFAULT_ETA: f64 = 1e-3;

/// Tolerance for the feasibility and optimality certificate.
pub const KKT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrpProblem {
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    /// Prior precisions divided by `C`.
    pub a: Vec<f64>,
}

impl CrpProblem {
    pub fn new(v: Vec<f64>, p: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if v.len() != p.len() || v.len() != a.len() {
            return Err(Error::InvalidParameter(format!(
                "coefficient lengths differ: v={}, p={}, a={}",
                v.len(),
                p.len(),
                a.len()
            )));
        }
        if v.is_empty() {
            return Err(Error::InvalidParameter("empty allocation problem".into()));
        }
        for i in 0..v.len() {
            if !(v[i] > 0.0 && v[i].is_finite() && p[i] > 0.0 && p[i].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "v and p must be positive and finite (entry {i}: v={}, p={})",
                    v[i], p[i]
                )));
            }
            if !(a[i] >= 0.0 && a[i].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "prior must be finite and nonnegative (entry {i}: {})",
                    a[i]
                )));
            }
        }
        Ok(CrpProblem { v, p, a })
    }

    /// Problem with no prior information.
    pub fn without_priors(v: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let a = vec![0.0; v.len()];
        CrpProblem::new(v, p, a)
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// `Σ v_τ / (x_τ + a_τ)`; infinite if some term has no precision at all.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.v.iter().zip(x).zip(&self.a).map(|((v, x), a)| v / (x + a)).sum()
    }

    /// `Σ p_τ x_τ`.
    pub fn budget_used(&self, x: &[f64]) -> f64 {
        self.p.iter().zip(x).map(|(p, x)| p * x).sum()
    }

    fn threshold(&self, i: usize) -> f64 {
        self.a[i] * (self.p[i] / self.v[i]).sqrt()
    }

    /// `c = (1 + Q)/S` restricted to the coordinates in `free`.
    fn level(&self, free: &[bool]) -> f64 {
        let (mut s, mut q) = (0.0, 0.0);
        for i in (0..self.len()).filter(|&i| free[i]) {
            s += (self.p[i] * self.v[i]).sqrt();
            q += self.p[i] * self.a[i];
        }
        (1.0 + q) / s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrpSolution {
    pub x: Vec<f64>,
    /// Coordinates pinned at zero by the active set.
    pub clamped: Vec<bool>,
    /// Lagrange multiplier of the budget constraint.
    pub multiplier: f64,
    /// Number of closed-form solves performed.
    pub iterations: usize,
}

/// Closed form of the problem without the sign constraints; may be negative.
pub fn relaxed_closed_form(problem: &CrpProblem) -> Vec<f64> {
    let c = problem.level(&vec![true; problem.len()]);
    (0..problem.len())
        .map(|i| c * (problem.v[i] / problem.p[i]).sqrt() - problem.a[i])
        .collect()
}

/// Optimal `x ≥ 0` for the transformed problem.
pub fn solve_crp(problem: &CrpProblem) -> Result<CrpSolution> {
    let n = problem.len();
    let mut free = vec![true; n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > n {
            return Err(Error::Solver(format!(
                "active set did not settle within {n} iterations"
            )));
        }
        let c = problem.level(&free);
        let mut changed = false;
        for (i, f) in free.iter_mut().enumerate() {
            if *f && problem.threshold(i) >= c {
                *f = false;
                changed = true;
            }
        }
        if changed {
            continue;
        }
        let x: Vec<f64> = (0..n)
            .map(|i| {
                if free[i] {
                    (c * (problem.v[i] / problem.p[i]).sqrt() - problem.a[i]).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let solution = CrpSolution {
            x,
            clamped: free.iter().map(|f| !f).collect(),
            multiplier: 1.0 / (c * c),
            iterations,
        };
        check_kkt(problem, &solution)?;
        return Ok(solution);
    }
}

/// Verify feasibility, stationarity on the free set, and the sign condition
/// on the clamped set.
pub fn check_kkt(problem: &CrpProblem, solution: &CrpSolution) -> Result<()> {
    let used = problem.budget_used(&solution.x);
    if used > 1.0 + KKT_TOLERANCE || solution.x.iter().any(|&x| x < 0.0) {
        return Err(Error::Solver(format!("infeasible allocation (budget share {used})")));
    }
    let lambda = solution.multiplier;
    for i in 0..problem.len() {
        let (v, p, a, x) = (problem.v[i], problem.p[i], problem.a[i], solution.x[i]);
        if solution.clamped[i] {
            if v / (a * a) > lambda * p * (1.0 + KKT_TOLERANCE) {
                return Err(Error::Solver(format!(
                    "clamped coordinate {i} would improve the objective"
                )));
            }
        } else {
            let g = v / ((x + a) * (x + a));
            if ((g - lambda * p) / (lambda * p)).abs() > 1e-6 {
                return Err(Error::Solver(format!("stationarity violated at coordinate {i}")));
            }
        }
    }
    Ok(())
}

/// Noise variance of one retained measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Retained {
    pub index: usize,
    pub variance: f64,
}

/// Drop measurements whose budget share `p_τ x_τ` is below `eta`; the rest
/// are measured with `σ_τ² = 1/(C x_τ)`. May return an empty list.
pub fn postprocess(problem: &CrpProblem, solution: &CrpSolution, eta: f64, c: f64) -> Result<Vec<Retained>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {eta}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("budget C must be positive, got {c}")));
    }
    Ok(solution
        .x
        .iter()
        .enumerate()
        .filter(|&(i, &x)| x > 0.0 && problem.p[i] * x >= eta)
        .map(|(index, &x)| Retained {
            index,
            variance: 1.0 / (c * x),
        })
        .collect())
}

/// Allocation with the same variance for every residual, exhausting the budget.
pub fn iid_constant_allocation(problem: &CrpProblem) -> Vec<f64> {
    let total: f64 = problem.p.iter().sum();
    vec![1.0 / total; problem.len()]
}

/// Allocation implied by noising the whole marginal with iid noise and
/// decomposing: `σ_τ²` proportional to `n_{γ\τ}`, scaled to exhaust the budget.
pub fn iid_marginal_allocation(problem: &CrpProblem, smear_sizes: &[f64]) -> Result<Vec<f64>> {
    if smear_sizes.len() != problem.len() || smear_sizes.iter().any(|&s| !(s >= 1.0)) {
        return Err(Error::InvalidParameter(
            "smear sizes must be ≥ 1, one per residual".into(),
        ));
    }
    let raw: Vec<f64> = smear_sizes.iter().map(|s| 1.0 / s).collect();
    let scale = 1.0 / problem.budget_used(&raw);
    Ok(raw.into_iter().map(|x| x * scale).collect())
}

/// `v'_τ = Σ_{γ∈W, γ⊇τ} v_τ(γ)` for a single `τ`.
pub fn aggregate_weight(workload: &[AttrSet], domain: &Domain, tau: &AttrSet) -> Result<f64> {
    let mut total = 0.0;
    let mut found = false;
    for g in workload.iter().filter(|g| tau.is_subset(g)) {
        total += v_tau(domain, g, tau)?;
        found = true;
    }
    if !found {
        return Err(Error::InvalidParameter(format!(
            "residual {tau} is not contained in any workload marginal"
        )));
    }
    Ok(total)
}

/// Aggregated variance coefficients for every residual in the downward closure.
pub fn aggregate_workload_weights(workload: &[AttrSet], domain: &Domain) -> Result<BTreeMap<AttrSet, f64>> {
    if workload.is_empty() {
        return Err(Error::InvalidParameter("empty workload".into()));
    }
    let mut out = BTreeMap::new();
    for g in workload {
        for tau in g.subsets()? {
            *out.entry(tau.clone()).or_insert(0.0) += v_tau(domain, g, &tau)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(a0: f64) -> CrpProblem {
        CrpProblem::new(vec![0.25, 0.5], vec![1.0, 0.5], vec![a0, 0.0]).unwrap()
    }

    #[test]
    fn relaxed_worked_example() {
        let x = relaxed_closed_form(&toy(0.0));
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let x = relaxed_closed_form(&toy(10.0));
        assert!((x[0] + 4.5).abs() < 1e-12);
    }

    #[test]
    fn fast_path_matches_relaxed() {
        let p = toy(0.0);
        let s = solve_crp(&p).unwrap();
        assert_eq!(s.x, relaxed_closed_form(&p));
        assert_eq!(s.iterations, 1);
        assert!(s.clamped.iter().all(|c| !c));
    }

    #[test]
    fn clamped_worked_example() {
        let s = solve_crp(&toy(10.0)).unwrap();
        assert_eq!(s.x[0], 0.0);
        assert!((s.x[1] - 2.0).abs() < 1e-12);
        assert_eq!(s.clamped, vec![true, false]);
    }

    #[test]
    fn postprocess_rules() {
        let p = toy(10.0);
        let s = solve_crp(&p).unwrap();
        let r = postprocess(&p, &s, DEFAULT_ETA, 0.5).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].index, 1);
        assert!((r[0].variance - 1.0).abs() < 1e-12);

        // share exactly at the threshold is kept
        let p = CrpProblem::new(vec![1.0], vec![0.5], vec![0.0]).unwrap();
        let s = CrpSolution {
            x: vec![0.25],
            clamped: vec![false],
            multiplier: 1.0,
            iterations: 1,
        };
        assert_eq!(postprocess(&p, &s, 0.125, 1.0).unwrap().len(), 1);
        assert!(postprocess(&p, &s, 0.125 + 1e-12, 1.0).unwrap().is_empty());
        assert!(postprocess(&p, &s, 0.0, 1.0).is_err());
        assert!(postprocess(&p, &s, 0.5, 0.0).is_err());
    }

    #[test]
    fn invalid_problems() {
        assert!(CrpProblem::new(vec![1.0], vec![0.0], vec![0.0]).is_err());
        assert!(CrpProblem::new(vec![1.0], vec![1.0], vec![-1.0]).is_err());
        assert!(CrpProblem::new(vec![1.0], vec![1.0], vec![f64::INFINITY]).is_err());
        assert!(CrpProblem::new(vec![1.0, 2.0], vec![1.0], vec![0.0]).is_err());
        assert!(CrpProblem::new(vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn aggregate_weights() {
        let d = Domain::from_sizes(vec![2, 3]).unwrap();
        let w = [AttrSet::singleton(0), AttrSet::new(vec![0, 1])];
        let v = aggregate_weight(&w, &d, &AttrSet::singleton(0)).unwrap();
        assert!((v - 5.0 / 9.0).abs() < 1e-15);
        let all = aggregate_workload_weights(&w, &d).unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(all[&AttrSet::singleton(0)], v);
        assert!(aggregate_weight(&[AttrSet::singleton(0)], &d, &AttrSet::singleton(1)).is_err());
    }

    #[test]
    fn iid_marginal_costs_whole_budget() {
        // γ = {0,1} with n = (3,4): order ∅, {0}, {1}, {0,1}
        let d = Domain::from_sizes(vec![3, 4]).unwrap();
        let g = AttrSet::new(vec![0, 1]);
        let taus = g.subsets().unwrap();
        let v = taus.iter().map(|t| v_tau(&d, &g, t).unwrap()).collect();
        let p = taus.iter().map(|t| crate::privacy::p_tau(&d, t)).collect();
        let prob = CrpProblem::without_priors(v, p).unwrap();
        let smear: Vec<f64> = taus
            .iter()
            .map(|t| g.difference(t).iter().map(|i| d.size(i) as f64).product())
            .collect();
        let x = iid_marginal_allocation(&prob, &smear).unwrap();
        assert!((prob.budget_used(&x) - 1.0).abs() < 1e-12);
        // all residuals share the marginal's noise level σ²: x_τ·n_{γ\τ} constant
        let k = x[0] * smear[0];
        assert!(x.iter().zip(&smear).all(|(x, s)| (x * s - k).abs() < 1e-12));
        let opt = solve_crp(&prob).unwrap();
        assert!(prob.objective(&opt.x) <= prob.objective(&x) * (1.0 + 1e-12));
    }
}
