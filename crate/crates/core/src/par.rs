//! Deterministic parallel reduction over trials.
//!
//! Trials are cut into fixed-size chunks independent of the thread count;
//! chunk results come back in chunk order, so any fold over them is
//! reproducible bit-for-bit.

use std::ops::Range;

use rayon::prelude::*;

pub const CHUNK: u64 = 4096;

pub fn map_chunks<T, F>(total: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(total)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covers_every_trial_once() {
        let parts = map_chunks(10_000, |r| r.collect::<Vec<_>>());
        let flat: Vec<u64> = parts.into_iter().flatten().collect();
        assert_eq!(flat, (0..10_000).collect::<Vec<_>>());
    }
}
