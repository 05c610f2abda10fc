//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator
//! (`rand_chacha::ChaCha8Rng`) whose 64-bit seed is derived from a master
//! seed, a purpose tag and an index by SplitMix64 mixing:
//!
//! ```text
//! derive(master, purpose, index) = mix(mix(master, purpose), index)
//! mix(a, b)                      = splitmix64(a ^ splitmix64(b))
//! ```
//!
//! Streams depend only on these three values, never on scheduling, so
//! parallel runs reproduce serial ones bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose tags keep streams used for different things disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Bernoulli = 0x6265_726e_6f75_6c6c,
    Gaussian = 0x6761_7573_7369_616e,
    RipSample = 0x7269_7073_616d_706c,
    Signal = 0x7369_676e_616c_0000,
    Support = 0x7375_7070_6f72_7400,
    Matrix = 0x6d61_7472_6978_0000,
    Coherence = 0x636f_6865_7265_6e63,
    Trial = 0x7472_6961_6c00_0000,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

pub fn derive(master: u64, purpose: Purpose, index: u64) -> u64 {
    mix(mix(master, purpose as u64), index)
}

pub fn stream(master: u64, purpose: Purpose, index: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(master, purpose, index))
}
