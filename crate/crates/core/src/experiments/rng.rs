//! Seeded random streams.
//!
//! Every consumer derives its generator from `(seed, stream)`: the seed picks
//! the ChaCha key and the stream index selects an independent keystream. Trial
//! `t` of a plan always uses stream `t`, whatever thread runs it.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixedpoint::Frac64;

/// Algorithm identifier written into output metadata.
pub const PRNG_ID: &str = "chacha8/seed_from_u64/stream";

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform on `[0, 1)` with 53 random bits.
#[inline]
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform raw fixed-point fraction: the exact discretisation of a uniform
/// real in `[0, 1)`.
#[inline]
pub fn random_frac(rng: &mut impl RngCore) -> Frac64 {
    Frac64::from_raw(rng.next_u64())
}
