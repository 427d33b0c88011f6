//! Seed derivation. Every random draw in the crate comes from a substream
//! addressed by `(master seed, domain, index)`, so results never depend on
//! the order in which independent pieces of work are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes for which randomness is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    BaseVector = 1,
    Permutation = 2,
    Population = 3,
    Variation = 4,
    Synthetic = 5,
    Appendix = 6,
    Standalone = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for one `(seed, domain, index)` substream.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(domain as u64)) ^ index);
    ChaCha8Rng::seed_from_u64(mixed)
}
