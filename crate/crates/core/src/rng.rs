//! Deterministic randomness for the probabilistic constructions.
//!
//! All sampling is driven by ChaCha12 (seeded via `seed_from_u64`, with
//! explicit stream selection) plus in-house rejection sampling, so every
//! output is a pure, cross-platform function of `(seed, stream)` independent
//! of the `rand` ecosystem's distribution internals.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::coordset::CoordSet;

pub struct DetRng(ChaCha12Rng);

impl DetRng {
    pub fn new(seed: u64) -> DetRng {
        DetRng(ChaCha12Rng::seed_from_u64(seed))
    }

    /// Independent substream of the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> DetRng {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        DetRng(rng)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Unbiased uniform draw from `[0, n)` by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        // 2^64 mod n; values below it would bias the remainder
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    /// Uniform draw from `[lo, hi]` inclusive.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    /// Uniformly random `r`-subset of `[1, d]` via partial Fisher-Yates.
    pub fn subset(&mut self, d: usize, r: usize) -> CoordSet {
        assert!(r <= d);
        let mut pool: Vec<u32> = (1..=d as u32).collect();
        let mut out = CoordSet::empty(d);
        for i in 0..r {
            let j = i + self.below((d - i) as u64) as usize;
            pool.swap(i, j);
            out.insert(pool[i]);
        }
        out
    }
}
