//! Deterministic random streams.
//!
//! Every random quantity in the workbench is drawn from a ChaCha8 stream
//! addressed by `(seed, stream)`, so results never depend on the number of
//! worker threads or on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Opens stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a parent seed and a tag (splitmix64 finalizer).
pub fn derive(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the initial network weights of a run.
pub fn init_seed(run_seed: u64) -> u64 {
    derive(run_seed, TAG_INIT)
}

/// Seed of the fixed evaluation batches of a run.
pub fn evaluation_seed(run_seed: u64) -> u64 {
    derive(run_seed, TAG_EVAL)
}

// Tags keep the sub-streams of one experiment apart.
pub(crate) const TAG_GMM: u64 = 0x474d_4d;
pub(crate) const TAG_EVAL: u64 = 0x4556_414c;
pub(crate) const TAG_TRIAL: u64 = 0x5452_4941;
pub(crate) const TAG_INIT: u64 = 0x494e_4954;
pub(crate) const TAG_REFERENCE: u64 = 0x5245_46;
pub(crate) const TAG_BALL: u64 = 0x4241_4c4c;
