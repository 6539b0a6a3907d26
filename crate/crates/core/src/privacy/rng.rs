use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gumbel, StandardNormal};

/// Seeded random stream. All randomness of a mechanism run flows through a
/// single instance, so identical seeds and call sequences reproduce outputs
/// bit for bit.
#[derive(Debug, Clone)]
pub struct DpRng {
    inner: ChaCha20Rng,
    seed: u64,
}

impl DpRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        DpRng {
            inner: ChaCha20Rng::seed_from_u64(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One draw from `N(0, 1)`.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// One draw from `N(0, std^2)`.
    pub fn gaussian(&mut self, std: f64) -> f64 {
        std * self.standard_normal()
    }

    /// One draw from the standard Gumbel distribution.
    pub fn gumbel(&mut self) -> f64 {
        Gumbel::new(0.0, 1.0)
            .expect("unit Gumbel parameters are valid")
            .sample(&mut self.inner)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Access to the underlying generator for `rand` APIs.
    pub fn inner_mut(&mut self) -> &mut ChaCha20Rng {
        &mut self.inner
    }
}
