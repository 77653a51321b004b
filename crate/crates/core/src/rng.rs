//! Deterministic randomness.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] (rand_chacha 0.9,
//! whose output is value-stable across platforms and releases). Child
//! streams are never split off a shared generator: they are re-seeded from
//! `derive_seed(master, keys)`, a SplitMix64 chain over the master seed and
//! a stable task key, so results do not depend on scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a master seed together with an ordered list of task keys.
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(GOLDEN))))
}

/// 64-bit FNV-1a, used to turn names and canonical spec documents into task keys.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A single-owner seeded stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    master_seed: u64,
    stream: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(master_seed: u64) -> Self {
        SeededRng { master_seed, stream: ChaCha8Rng::seed_from_u64(master_seed) }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Seed of the child stream for `keys`; independent of how much of this
    /// stream has been consumed.
    pub fn child_seed(&self, keys: &[u64]) -> u64 {
        derive_seed(self.master_seed, keys)
    }

    pub fn child(&self, keys: &[u64]) -> SeededRng {
        SeededRng::new(self.child_seed(keys))
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        rand::Rng::random_range(self, 0..n)
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        rand::Rng::random::<f64>(self)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `0..n`, returned in ascending order.
    pub fn subsample(&mut self, n: usize, count: usize) -> Vec<usize> {
        let count = count.min(n);
        if count == n {
            return (0..n).collect();
        }
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool.sort_unstable();
        pool
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.stream.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.stream.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.stream.fill_bytes(dst)
    }
}
