//! Deterministic seeding.
//!
//! Every randomized routine takes an explicit `u64` seed and drives a
//! [`Xoshiro256PlusPlus`] stream, so outputs are bit-reproducible across
//! runs and platforms. Independent substreams (replications, folds,
//! chains) get their own seeds via [`derive_seed`], so adding more
//! substreams never perturbs existing ones.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus;

/// The pseudo-random generator used throughout the crate.
pub type Rng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// SplitMix64 finalizer; full-period bijection on `u64`.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derives the seed of substream `stream` from a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_add(0xa076_1d64_78bd_642f)))
}
