//! Seeded random streams.
//!
//! Every stochastic component draws from a ChaCha8 stream derived from a base
//! seed and a path of integer keys (sample index, step, ...). Results therefore
//! do not depend on scheduling order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mix a base seed with a key path into a single 64-bit seed.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// An independent stream for `(seed, keys...)`.
pub fn substream(seed: u64, keys: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, keys))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Stable small integers used as the first key of a substream path.
pub mod domain {
    pub const CODEBOOK: u64 = 1;
    pub const DATASET: u64 = 2;
    pub const EMBED: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const PROJECTION: u64 = 5;
    pub const HILL_CLIMB: u64 = 6;
    pub const GENETIC: u64 = 7;
    pub const POOL: u64 = 8;
}
