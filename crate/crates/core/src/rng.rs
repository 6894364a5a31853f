//! Named, seeded random streams.
//!
//! A stream is derived from a root seed and a label, so that every purpose
//! (data generation, sphere directions, minibatches, output pick) draws from
//! its own reproducible sequence.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub const DATA_GEN: &str = "data-gen";
pub const SPHERE: &str = "sphere";
pub const SPHERE_X: &str = "sphere-x";
pub const SPHERE_Y: &str = "sphere-y";
pub const MINIBATCH: &str = "minibatch";
pub const OUTPUT_PICK: &str = "output-pick";

/// 64-bit FNV-1a.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(seed, label)`: `splitmix64(seed ^ splitmix64(fnv1a(label)))`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    splitmix64(seed ^ splitmix64(label_hash(label)))
}

pub struct RngStream {
    seed: u64,
    label: String,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        RngStream {
            seed,
            label: label.to_string(),
            rng: ChaCha12Rng::seed_from_u64(derive_seed(seed, label)),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
