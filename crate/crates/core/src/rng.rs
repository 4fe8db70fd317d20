//! Counter-based random streams.
//!
//! Every random draw in a simulation is addressed by `(master seed, domain,
//! index)`, so results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream domains. Distinct domains never share a keystream.
pub mod domain {
    pub const CHANNEL: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const BITS: u64 = 3;
    pub const SNR: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const INIT: u64 = 6;
    pub const SPLIT: u64 = 7;
    pub const CORRELATION: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for draw `index` of `domain` under `master`.
pub fn substream(master: u64, domain: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, for handing a whole sub-experiment its own master.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(domain)) ^ index)
}
