//! Seeded randomness.
//!
//! Every random stream is a xoshiro256++ generator (as published by Blackman
//! and Vigna) whose 64-bit seed is obtained by folding a base seed with a
//! sequence of tags through the SplitMix64 finalizer:
//!
//! ```text
//! h = base
//! for tag in tags: h = splitmix64(h ^ splitmix64(tag))
//! stream = Xoshiro256PlusPlus::seed_from_u64(h)
//! ```
//!
//! `seed_from_u64` itself expands the seed with SplitMix64, so the state of
//! every stream is a documented function of its tags. Nature draws from the
//! stream `(seed, NATURE)`; an agent's observations at tick `t` come from
//! `(seed, OBSERVE, agent, t)`; strategies use `(strategy_seed, tick)`.

use num::rational::Ratio;
use num::Integer;
use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Stream = Xoshiro256PlusPlus;

pub const NATURE: u64 = 0x6e61_7475_7265;
pub const OBSERVE: u64 = 0x6f62_7365_7276;
pub const REPLICATE: u64 = 0x7265_706c_6963;
pub const STRATEGY: u64 = 0x7374_7261_7467;

/// The SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(base, |h, t| splitmix64(h ^ splitmix64(*t)))
}

pub fn stream(base: u64, tags: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(base, tags))
}

/// Bernoulli trial with an exact rational success probability.
pub fn chance(rng: &mut Stream, p: Ratio<u64>) -> bool {
    if *p.numer() == 0 {
        return false;
    }
    rng.random_range(0..*p.denom()) < *p.numer()
}

/// Index drawn with probability proportional to exact rational weights.
/// Weights must not all be zero.
pub fn pick_weighted(rng: &mut Stream, weights: &[Ratio<u64>]) -> usize {
    let denom = weights.iter().fold(1u64, |acc, w| acc.lcm(w.denom()));
    let scaled: Vec<u64> = weights.iter().map(|w| w.numer() * (denom / w.denom())).collect();
    let total: u64 = scaled.iter().sum();
    let mut x = rng.random_range(0..total);
    for (i, w) in scaled.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    unreachable!("draw below the total weight")
}
