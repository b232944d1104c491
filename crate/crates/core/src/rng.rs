//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator (a counter-based stream cipher)
//! seeded from the user's 64-bit seed, with the 64-bit ChaCha stream id
//! derived by hashing a path of indices (trial, phase, chunk, ...). Streams
//! for distinct paths are independent and do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Tags that keep different consumers of one seed apart.
pub mod tag {
    pub const HOMODYNE_PHASE: u64 = 1;
    pub const HETERODYNE_CHUNK: u64 = 2;
    pub const TRIAL: u64 = 3;
    pub const STATE_DRAW: u64 = 4;
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_id(path: &[u64]) -> u64 {
    path.iter().fold(0x6d74_6c61_6221_u64, |h, &p| mix(h ^ mix(p)))
}

/// Generator for `seed` on the substream identified by `path`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(path));
    rng
}
