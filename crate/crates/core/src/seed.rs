//! Seed derivation.
//!
//! Every random source in a run is a ChaCha8 stream keyed by a `u64` seed and
//! a stream selector, so separate consumers never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Offset added to a run seed for the train/test split generator.
pub const SPLIT_OFFSET: u64 = 0;
/// Offset added to a run seed for the replay-buffer generator.
pub const SAMPLER_OFFSET: u64 = 1000;
/// Offset added to a run seed for learner initialization and shuffling.
pub const LEARNER_OFFSET: u64 = 2000;

pub type Rng = ChaCha8Rng;

/// Generator for `seed` on a given stream.
pub fn rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; mixes a seed with a sub-index into a new seed.
pub fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_differ() {
        let a: u64 = rng(7, 0).random();
        let b: u64 = rng(7, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, rng(7, 0).random::<u64>());
    }

    #[test]
    fn mix_separates_indices() {
        assert_ne!(mix(1, 0), mix(0, 1));
        assert_ne!(mix(5, 3), mix(5, 4));
    }
}
