//! Seeded random streams and deterministic chunked fan-out.
//!
//! Work of size `n` is cut into fixed chunks; chunk `c` always draws from
//! stream `(seed, salt, c)` and results come back in chunk order, so output
//! does not depend on how many threads rayon uses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::ops::Range;

pub type SimRng = ChaCha8Rng;

pub const CHUNK: usize = 2048;

/// Independent stream for `(seed, id)`.
pub fn stream(seed: u64, id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Stream id for chunk `c` of a computation tagged `salt`.
pub fn chunk_stream_id(salt: u32, c: usize) -> u64 {
    ((salt as u64) << 40) | c as u64
}

/// Runs `f` over fixed-size chunks of `0..n` and returns the per-chunk results in order.
pub fn par_chunks<T, F>(n: usize, chunk: usize, seed: u64, salt: u32, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, Range<usize>) -> T + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, chunk_stream_id(salt, c));
            f(&mut rng, c * chunk..((c + 1) * chunk).min(n))
        })
        .collect()
}

/// Uniform on `(0, 1]`, safe to take the log of.
#[inline]
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
