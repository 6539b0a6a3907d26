use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking spend against the total budget.
pub const BUDGET_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub cost: f64,
}

/// zCDP budget tracker. Costs compose additively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accountant {
    total: f64,
    used: f64,
    ledger: Vec<LedgerEntry>,
}

impl Accountant {
    pub fn new(total: f64) -> Result<Self> {
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "privacy budget must be positive and finite, got {total}"
            )));
        }
        Ok(Accountant {
            total,
            used: 0.0,
            ledger: Vec::new(),
        })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn used(&self) -> f64 {
        self.used
    }

    pub fn remaining(&self) -> f64 {
        self.total - self.used
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    /// Record a mechanism's cost. Spending past the total is a hard error and
    /// leaves the accountant unchanged.
    pub fn compose(&mut self, label: impl Into<String>, cost: f64) -> Result<()> {
        if !(cost >= 0.0) || !cost.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "privacy cost must be nonnegative and finite, got {cost}"
            )));
        }
        if self.used + cost > self.total + BUDGET_TOLERANCE {
            return Err(Error::BudgetExceeded {
                used: self.used,
                cost,
                total: self.total,
            });
        }
        self.used += cost;
        self.ledger.push(LedgerEntry {
            label: label.into(),
            cost,
        });
        Ok(())
    }
}
