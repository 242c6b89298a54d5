//! Counter-based seeding.
//!
//! Every random draw in the library is keyed by a master seed plus a path of
//! integer coordinates (stream tag, trajectory index, time index, ...). The
//! key is hashed into a fresh ChaCha8 stream, so the value of a draw depends
//! only on its coordinates and never on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags that separate the independent uses of a master seed.
pub mod tag {
    pub const INITIALS: u64 = 0x01;
    pub const NOISE: u64 = 0x02;
    pub const ENVELOPE_INITIALS: u64 = 0x03;
    pub const ENVELOPE_TIMES: u64 = 0x04;
    pub const REPETITION: u64 = 0x05;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `(seed, path...)` into a 64-bit key.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// A generator positioned at the stream identified by `(seed, path...)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
