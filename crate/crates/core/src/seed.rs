//! Deterministic per-realization random streams.
//!
//! A stream is keyed by `(master seed, experiment tag, realization, block)` and does not
//! depend on which worker draws it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3))
}

/// 64-bit key of the stream `(master, tag, j, b)`.
pub fn stream_key(master: u64, tag: &str, j: u64, b: u64) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(fnv1a(tag)));
    h = splitmix64(h ^ j);
    splitmix64(h ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream(master: u64, tag: &str, j: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(master, tag, j, b))
}

/// Master seed of repetition `i` in a multi-seed acceptance run.
pub fn repetition_seed(master: u64, i: u64) -> u64 {
    stream_key(master, "repetition", i, 0)
}
