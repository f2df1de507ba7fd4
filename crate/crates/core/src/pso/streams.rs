//! Counter-based random streams.
//!
//! Every draw is keyed on `(seed, cycle, particle, iteration, purpose)`, so
//! results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Velocity = 1,
    Sampling = 2,
    Drop = 3,
    Padding = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, cycle: u64, particle: u64, iteration: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = splitmix64(seed);
    for part in [cycle, particle, iteration, purpose as u64] {
        key = splitmix64(key ^ part);
    }
    ChaCha8Rng::seed_from_u64(key)
}
