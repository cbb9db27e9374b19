//! Seed derivation and stream separation.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! `(run seed, stream tag, index)`. Fast fading uses a stateless counter
//! hash instead of a stream so that draws do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named substreams. Adding a variant never perturbs the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Placement,
    Mobility,
    Shadowing,
    Fading,
    LbAgent,
    RaAgent,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Placement => 0x9e37_79b9_0000_0001,
            Stream::Mobility => 0x9e37_79b9_0000_0002,
            Stream::Shadowing => 0x9e37_79b9_0000_0003,
            Stream::Fading => 0x9e37_79b9_0000_0004,
            Stream::LbAgent => 0x9e37_79b9_0000_0005,
            Stream::RaAgent => 0x9e37_79b9_0000_0006,
        }
    }
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one 64-bit key.
#[inline]
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn stream(seed: u64, which: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(&[seed, which.tag(), index]))
}

/// Uniform in the open interval (0, 1) from a hashed counter.
#[inline]
pub fn unit_open(key: u64) -> f64 {
    // 53 random mantissa bits, shifted off zero.
    ((splitmix64(key) >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}
