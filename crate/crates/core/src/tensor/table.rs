use serde::{Deserialize, Serialize};

use super::{AttrSet, Domain, Marginal, NdArray};
use crate::error::{Error, Result};

/// Categorical dataset: one index per attribute per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    domain: Domain,
    /// Row-major, `domain.len()` entries per record.
    values: Vec<usize>,
}

impl DataTable {
    pub fn new(domain: Domain, records: Vec<Vec<usize>>) -> Result<Self> {
        let d = domain.len();
        let mut values = Vec::with_capacity(records.len() * d);
        for (r, rec) in records.into_iter().enumerate() {
            if rec.len() != d {
                return Err(Error::ShapeMismatch {
                    expected: vec![d],
                    found: vec![rec.len()],
                });
            }
            for (a, &v) in rec.iter().enumerate() {
                if v >= domain.size(a) {
                    return Err(Error::ValueOutOfRange {
                        record: r,
                        attr: a,
                        value: v,
                        size: domain.size(a),
                    });
                }
            }
            values.extend(rec);
        }
        Ok(DataTable { domain, values })
    }

    pub fn empty(domain: Domain) -> Self {
        DataTable {
            domain,
            values: Vec::new(),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Number of records `N`.
    pub fn len(&self) -> usize {
        if self.domain.is_empty() {
            0
        } else {
            self.values.len() / self.domain.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn record(&self, r: usize) -> &[usize] {
        let d = self.domain.len();
        &self.values[r * d..(r + 1) * d]
    }

    pub fn records(&self) -> impl Iterator<Item = &[usize]> {
        self.values.chunks_exact(self.domain.len().max(1))
    }

    /// Count records per cell of the marginal over `attrs`.
    pub fn marginal(&self, attrs: &AttrSet) -> Result<Marginal> {
        compute_marginal(self, attrs)
    }
}

/// Count records per cell of the marginal over `attrs`.
pub fn compute_marginal(table: &DataTable, attrs: &AttrSet) -> Result<Marginal> {
    let domain = table.domain();
    let cells = domain.cells(attrs)?;
    let shape = domain.marginal_shape(attrs);
    let mut strides = vec![1usize; attrs.len()];
    for k in (0..attrs.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    let mut counts = vec![0.0; cells];
    for rec in table.records() {
        let idx: usize = attrs.iter().zip(&strides).map(|(a, s)| rec[a] * s).sum();
        counts[idx] += 1.0;
    }
    Marginal::new(domain, attrs.clone(), NdArray::new(shape, counts)?)
}
