//! Seed derivation for independent random substreams.
//!
//! Work that runs per subject (class updates, random-effect updates,
//! simulation) draws from its own generator seeded from the run seed and a
//! tuple of tags, so the draws do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

pub mod tags {
    pub const MAIN: u64 = 0x4d41_494e;
    pub const CLASSES: u64 = 0x434c_5353;
    pub const EFFECTS: u64 = 0x4546_4654;
    pub const INIT: u64 = 0x494e_4954;
    pub const SIMULATE: u64 = 0x5349_4d55;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes `seed` with `tags` into a 64-bit stream key.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn substream(seed: u64, tags: &[u64]) -> ChainRng {
    ChainRng::seed_from_u64(derive_seed(seed, tags))
}
