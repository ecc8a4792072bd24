//! Keyed pseudo-random streams.
//!
//! Every random draw in the crate comes from a stream addressed by
//! `(seed, purpose, index)`. The seed and purpose select a ChaCha key, the
//! index selects the ChaCha stream, so a draw never depends on how many
//! other draws happened before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Independent mini-batch for iteration `index`.
    Batch,
    /// Permutation of the index set for epoch `index`.
    Shuffle,
    /// Gradient noise for sample handle `index`.
    Noise,
    /// Derivation of the `index`-th seed of a sweep.
    Seed,
    /// Synthetic data generation.
    Synthetic,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Batch => 0x6261_7463_6800_0001,
            Purpose::Shuffle => 0x7368_7566_6600_0002,
            Purpose::Noise => 0x6e6f_6973_6500_0003,
            Purpose::Seed => 0x7365_6564_0000_0004,
            Purpose::Synthetic => 0x7379_6e74_6800_0005,
        }
    }
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the stream `(seed, purpose, index)`.
pub fn keyed(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let key = mix64(seed ^ mix64(purpose.tag()));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// The `i`-th seed derived from a master seed. Seed lists built this way are
/// prefix-stable: the first ten seeds of a fifty-seed sweep are the ten seeds
/// of a ten-seed sweep.
pub fn derived_seed(master: u64, i: u64) -> u64 {
    mix64(mix64(master ^ Purpose::Seed.tag()).wrapping_add(i))
}
