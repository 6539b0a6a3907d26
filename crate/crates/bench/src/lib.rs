//! Fixtures shared by the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use resmarg::{AttrSet, DataTable, Domain, Marginal, NdArray};

/// Domain of `k` attributes of size `n`, with the full attribute set.
pub fn cube(k: usize, n: usize) -> (Domain, AttrSet) {
    let d = Domain::from_sizes(vec![n; k]).expect("valid domain");
    (d, AttrSet::new((0..k).collect()))
}

/// Marginal over `attrs` with uniform random counts.
pub fn random_marginal(domain: &Domain, attrs: &AttrSet, seed: u64) -> Marginal {
    let mut rng = StdRng::seed_from_u64(seed);
    let shape = domain.marginal_shape(attrs);
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.random_range(0.0..100.0)).collect();
    Marginal::new(domain, attrs.clone(), NdArray::new(shape, data).expect("shape")).expect("marginal")
}

/// Table of `rows` uniform random records.
pub fn random_table(domain: &Domain, rows: usize, seed: u64) -> DataTable {
    let mut rng = StdRng::seed_from_u64(seed);
    let records = (0..rows)
        .map(|_| domain.sizes().iter().map(|&n| rng.random_range(0..n)).collect())
        .collect();
    DataTable::new(domain.clone(), records).expect("valid records")
}
