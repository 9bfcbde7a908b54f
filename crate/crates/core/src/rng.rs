//! Seeded random number generation.
//!
//! Every randomized operation takes an explicit generator; child streams are
//! derived with a splitmix-style mixer so parallel work stays reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a stream label.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream))
}

/// Order-sensitive hash of an id sequence; callers sort first when they need
/// set semantics.
pub fn hash_ids(ids: &[usize]) -> u64 {
    ids.iter()
        .fold(mix(ids.len() as u64), |h, &id| mix(h ^ id as u64))
}
