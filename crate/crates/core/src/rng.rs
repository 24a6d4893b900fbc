//! Every random draw in the crate goes through a ChaCha8 stream keyed by a
//! single `u64` seed (`rand_chacha::ChaCha8Rng::seed_from_u64`), so identical
//! seeds reproduce identical samples on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
