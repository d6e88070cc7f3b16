//! Portable seeded randomness.
//!
//! All perturbation randomness comes from SplitMix64 (Steele, Lea & Flood),
//! a 64-bit counter-based generator: the state advances by the constant
//! `0x9E3779B97F4A7C15` and each output is a fixed bit-mixing of the state.
//! It is implemented here rather than taken from a crate so that the exact
//! stream, and every golden file derived from it, never changes under a
//! dependency upgrade.
//!
//! Derived operations:
//! - [`SeededRng::below`]: unbiased integer in `[0, n)` by rejection of the
//!   lowest `2^64 mod n` outputs, then `x mod n`.
//! - [`SeededRng::shuffle`]: Fisher–Yates, `for i in (1..n).rev() { swap(i, below(i + 1)) }`.
//! - [`SeededRng::chance`]: `(x >> 11) * 2^-53 < p`, one draw per call.

/// Name of the generator, recorded in run manifests.
pub const ALGORITHM: &str = "splitmix64";

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function applied to an arbitrary word.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed for one record: `mix64(base XOR fnv1a64(key))`. Independent of
/// record order, so batch runs can fan out freely.
pub fn derive_seed(base: u64, key: &str) -> u64 {
    mix64(base ^ fnv1a64(key))
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return (x % n) as usize;
            }
        }
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw; always consumes exactly one output.
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// A uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }

    /// `k` distinct indices from `0..n`, in draw order (partial Fisher–Yates
    /// from the front).
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
