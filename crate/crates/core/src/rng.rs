//! Named random substreams derived from a single user-facing seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Substream names. Each consumer of randomness gets its own stream so that
/// changing one component never perturbs another.
pub const SAMPLING: u64 = 0x5341_4d50;
pub const SPLIT: u64 = 0x5350_4c54;
pub const FACTOR_INIT: u64 = 0x494e_4954;
pub const SYNTHETIC: u64 = 0x5359_4e54;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for `(seed, stream, index)`.
pub fn substream(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(seed ^ stream.rotate_left(17)) ^ index);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
