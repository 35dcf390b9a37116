//! Seed derivation.
//!
//! Every random stream in a run is derived from one 64-bit base seed through
//! [`mix`], a SplitMix64 finalizer applied to `a ^ rotl(b * GOLDEN, 32)`. It uses
//! only wrapping 64-bit integer arithmetic, so any implementation reproduces it.
//!
//! The derivation tree for a run with base seed `B` and Monte Carlo index `i`:
//!
//! ```text
//! run        = mix(B, i)
//! task       = mix(run, TASK)            true weights
//! population = mix(run, POPULATION)      malicious-node assignment
//! data(n, r) = mix(mix(run, DATA), 2n+r) per-node train (r=0) / test (r=1) set
//! oracle     = mix(run, ORACLE)          held-out evaluation set
//! round(k)   = mix(run, k)               k = 1-based round index
//! select     = mix(round(k), SELECT)
//! node(n)    = mix(mix(round(k), NODE), n)
//! ```
//!
//! The tags are small constants chosen well above any plausible round index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub const TAG_TASK: u64 = 0xF10C_0000_0000_0001;
pub const TAG_POPULATION: u64 = 0xF10C_0000_0000_0002;
pub const TAG_DATA: u64 = 0xF10C_0000_0000_0003;
pub const TAG_ORACLE: u64 = 0xF10C_0000_0000_0004;
pub const TAG_SELECT: u64 = 0xF10C_0000_0000_0005;
pub const TAG_NODE: u64 = 0xF10C_0000_0000_0006;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine two 64-bit values into a derived seed. Not symmetric in its arguments.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ b.wrapping_mul(GOLDEN).rotate_left(32))
}

pub fn run_seed(base: u64, index: u64) -> u64 {
    mix(base, index)
}

pub fn round_seed(run: u64, round: u64) -> u64 {
    mix(run, round)
}

pub fn node_seed(round: u64, node: u32) -> u64 {
    mix(mix(round, TAG_NODE), node as u64)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
