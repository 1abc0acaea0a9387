//! Seed derivation.
//!
//! Every random stream is a ChaCha8 generator seeded by
//! [`derive_seed`]`(master, stream, index)`. The mixing function is the
//! SplitMix64 finaliser applied to the master seed, a stream tag naming the
//! component and an index (replica, chunk, probe, ...). Streams for distinct
//! `(stream, index)` pairs are statistically independent, and the mapping is
//! stable across platforms and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Stream tags used by the library. Values are arbitrary but fixed forever.
pub mod streams {
    pub const DATASET: u64 = 0x01;
    pub const PRIOR: u64 = 0x02;
    pub const CHAIN: u64 = 0x03;
    pub const INIT: u64 = 0x04;
    pub const PROBE: u64 = 0x05;
    pub const IMPORTANCE: u64 = 0x06;
    pub const TENSOR: u64 = 0x07;
    pub const RESTART: u64 = 0x08;
    pub const CERTIFICATE: u64 = 0x09;
    pub const TILTED: u64 = 0x0a;
    pub const GRID: u64 = 0x0b;
    pub const REPLICA: u64 = 0x0c;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ splitmix64(index)))
}

pub fn rng_from(master: u64, stream: u64, index: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}
