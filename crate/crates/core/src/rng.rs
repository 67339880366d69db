//! Deterministic random numbers.
//!
//! All randomness in the crate flows through [`Rng`], a thin wrapper over
//! ChaCha8 (`rand_chacha`). ChaCha8 output is fully specified by its key and
//! stream id, so a given `(seed, stream)` pair produces the same sequence on
//! every platform. Seeding uses `SeedableRng::seed_from_u64`, whose expansion
//! is part of `rand_core`'s stable contract.
//!
//! Independent sub-streams are obtained with [`Rng::derive`], which keeps the
//! 256-bit key derived from the seed and selects a distinct 64-bit ChaCha
//! stream. Training uses this to give every epoch its own shuffle and dropout
//! stream, so resuming at an epoch boundary needs no saved generator state.

use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream tags used by the training harness.
pub mod stream {
    pub const DATA: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const DROPOUT: u64 = 5;
    pub const PROBE: u64 = 6;
}

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for sub-stream `(tag, index)` of `seed`.
    pub fn derive(seed: u64, tag: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream((tag << 40) ^ (index & ((1 << 40) - 1)));
        Self { seed, inner }
    }

    /// Child generator for `index`, independent of this generator's position.
    pub fn fork(&self, index: u64) -> Self {
        Self::derive(self.seed, stream::PROBE + 1, index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform sample in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform sample in `[lo, hi)`. Caller guarantees `lo < hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = Rng::new(9);
        let mut b = Rng::new(9);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derived_streams_differ() {
        let mut a = Rng::derive(1, stream::SHUFFLE, 0);
        let mut b = Rng::derive(1, stream::SHUFFLE, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn fork_ignores_parent_position() {
        let mut a = Rng::new(3);
        let b = Rng::new(3);
        a.next_u64();
        assert_eq!(a.fork(5).next_u64(), b.fork(5).next_u64());
    }

    #[test]
    fn uniform_in_range() {
        let mut r = Rng::new(0);
        for _ in 0..1000 {
            let v = r.uniform(-2.0, 3.0);
            assert!((-2.0..3.0).contains(&v));
        }
    }
}
