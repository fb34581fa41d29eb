//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 generators, which produce the same
//! sequence on every platform. A run is identified by a 64-bit seed; the
//! generator for `(seed, stream)` is `ChaCha8Rng::seed_from_u64(seed)`
//! switched to word stream `stream`, so distinct streams of one seed never
//! overlap. Per-trial seeds are derived from a master seed with
//! [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids used within one trial.
pub mod streams {
    pub const UR: u64 = 1 << 32;
    pub const RU: u64 = 2 << 32;
    pub const RR: u64 = 3 << 32;
    /// Thread `i` of a generated instance draws from stream `i`.
    pub const THREADS: u64 = 0;
}

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a master seed with a path of indices (SplitMix64 finalizer per step).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)))
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
