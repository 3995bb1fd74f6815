//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream keyed by the
//! user seed plus a stream id, so results never depend on the order in
//! which stages or features are evaluated.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PERMUTATION_TAG: u64 = 1 << 63;

/// Stream used to draw the row subsample of boosting stage `stage`.
pub fn stage_stream(seed: u64, stage: u64) -> ChaCha8Rng {
    stream(seed, stage)
}

/// Stream used for shuffle number `shuffle` of feature `feature`.
pub fn permutation_stream(seed: u64, feature: usize, shuffle: usize) -> ChaCha8Rng {
    let id = PERMUTATION_TAG | ((feature as u64 & 0x7fff_ffff) << 32) | (shuffle as u64 & 0xffff_ffff);
    stream(seed, id)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws `k` distinct indices from `0..n` without replacement by a partial
/// Fisher-Yates shuffle. The result is in draw order.
pub fn sample_without_replacement<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot draw {k} of {n}");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        // u64 bounds keep the draw identical on 32- and 64-bit targets.
        let j = rng.gen_range(i as u64..n as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Shuffles `items` in place (full Fisher-Yates).
pub fn shuffle<R: Rng, T>(rng: &mut R, items: &mut [T]) {
    let n = items.len();
    for i in 0..n.saturating_sub(1) {
        let j = rng.gen_range(i as u64..n as u64) as usize;
        items.swap(i, j);
    }
}
