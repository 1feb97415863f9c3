//! Deterministic RNG substreams.
//!
//! Every random quantity is drawn from a generator derived from the master
//! seed plus a (domain, index) path, so results do not depend on the order in
//! which parallel work items run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type AnalysisRng = ChaCha8Rng;

/// Domain tags separating independent uses of one seed.
pub mod domain {
    pub const FOLDS: u64 = 1;
    pub const SELECT: u64 = 2;
    pub const DEBIAS: u64 = 3;
    pub const DRAW: u64 = 4;
    pub const BOOTSTRAP: u64 = 5;
    pub const RESAMPLE: u64 = 6;
    pub const REFERENCE: u64 = 7;
    pub const DEGENERACY: u64 = 8;
    pub const FREQUENCY: u64 = 9;
    pub const POST_SELECTION: u64 = 10;
    pub const PREDICTOR: u64 = 11;
    pub const REPLICATION: u64 = 12;
    pub const DESIGN: u64 = 13;
    pub const TRUTH: u64 = 14;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(domain, index)` under `seed`.
#[inline]
pub fn derive(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(domain)) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

#[inline]
pub fn rng_from(seed: u64) -> AnalysisRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn substream(seed: u64, domain: u64, index: u64) -> AnalysisRng {
    rng_from(derive(seed, domain, index))
}
