//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`Stream`] whose seed is
//! derived from a master seed and a list of tags. Derivation is a SplitMix64
//! chain, so streams with different tags are independent for practical
//! purposes and fully reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use std::f64::consts::PI;

/// Stream tags used by the data generator and estimators.
pub mod tag {
    pub const COVARIATES: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const CORRUPTION_INDICES: u64 = 3;
    pub const CORRUPTION_VALUES: u64 = 4;
    pub const SIGMA: u64 = 5;
    pub const FOLDS: u64 = 6;
    pub const THRESHOLD: u64 = 7;
    pub const SIGNS: u64 = 8;
    pub const SUPPORT: u64 = 9;
    pub const POWER_ITERATION: u64 = 10;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and an ordered list of tags.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A reproducible random stream backed by the ChaCha8 block function.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn derived(master: u64, parts: &[u64]) -> Self {
        Self::new(derive_seed(master, parts))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `(0, 1]`.
    fn uniform_nonzero(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal via the Box-Muller transform; the second variate of
    /// each pair is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_nonzero();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Cauchy with location 0 via `scale * tan(pi * (u - 1/2))`.
    pub fn cauchy(&mut self, scale: f64) -> f64 {
        scale * (PI * (self.uniform() - 0.5)).tan()
    }

    pub fn student_t(&mut self, dof: f64, scale: f64) -> f64 {
        let chi = ChiSquared::new(dof).expect("dof validated by caller");
        let v: f64 = chi.sample(&mut self.rng);
        scale * self.normal() / (v / dof).sqrt()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// A uniformly random subset of `0..n` of size `k`, in selection order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k.min(n) {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k.min(n));
        pool
    }
}
