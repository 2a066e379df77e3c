//! Deterministic derivation of independent RNG streams.
//!
//! Experiments run cells, trials, and restarts concurrently; results must
//! not depend on scheduling. Every unit of work therefore draws from its
//! own stream, keyed by the master seed plus the unit's coordinates, so
//! any execution order reproduces the same bytes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full-period bijection on `u64`.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with the coordinates of a unit of work into a
/// child seed. Different coordinates give unrelated child seeds.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix64(base);
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    acc
}

/// Seeded generator for the unit of work at `parts`.
pub fn stream(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, parts))
}
