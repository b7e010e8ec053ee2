//! Seeded, splittable random streams.
//!
//! Every experiment derives its generators from a master seed: block `i` of
//! a Monte-Carlo run draws from ChaCha8 stream `i`, so results do not depend
//! on how blocks are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Replications per independent stream.
pub const BLOCK_SIZE: usize = 1 << 15;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open01(rng: &mut dyn RngCore) -> f64 {
    // 52 random mantissa bits, shifted off zero by half an ulp.
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Runs `draw` for `count` replications in deterministic blocks, each block
/// with its own stream, and concatenates the results in block order.
pub fn par_replicate<T, F>(seed: u64, count: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng) -> T + Sync,
{
    let blocks = count.div_ceil(BLOCK_SIZE);
    let chunks: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let len = BLOCK_SIZE.min(count - b * BLOCK_SIZE);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for c in chunks {
        out.extend(c);
    }
    out
}
