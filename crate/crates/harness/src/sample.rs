//! Seeded, platform-independent instance sampling.
//!
//! The generator is SplitMix64: the state advances by `0x9E3779B97F4A7C15`
//! (wrapping) and each output is the state passed through
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! with wrapping multiplication. A draw below `b` rejects outputs at or above
//! the largest multiple of `b` that fits in 64 bits and returns the output
//! modulo `b`. Each ranking is a Fisher-Yates shuffle of `[0, 1, ..., n-1]`:
//! for `i` from `n-1` down to `1`, swap positions `i` and a draw below
//! `i + 1`. Ballots are drawn in order from one generator seeded with the
//! given seed.

use crate::{HarnessError, Result};
use mvd_core::election::{Ranking, VoteProfile};

pub const MAX_CANDIDATES: usize = 7;
pub const MAX_BALLOTS: usize = 30;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        // 2^64 mod bound; outputs above u64::MAX - excess would bias the result.
        let excess = (u64::MAX % bound + 1) % bound;
        loop {
            let x = self.next_u64();
            if x <= u64::MAX - excess {
                return x % bound;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub fn ranking(&mut self, n: usize) -> Ranking {
        let mut order: Vec<usize> = (0..n).collect();
        self.shuffle(&mut order);
        Ranking::from_indices(&order).expect("a permutation")
    }
}

/// `m` unit-weight ballots with uniformly random rankings.
pub fn sample_instance(seed: u64, n: usize, m: usize) -> Result<VoteProfile> {
    if n == 0 || n > MAX_CANDIDATES || m == 0 || m > MAX_BALLOTS {
        return Err(HarnessError::CapExceeded(format!(
            "sampling needs 1 <= n <= {MAX_CANDIDATES} and 1 <= m <= {MAX_BALLOTS}, got n = {n}, m = {m}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let rankings: Vec<Vec<usize>> = (0..m).map(|_| rng.ranking(n).indices()).collect();
    Ok(VoteProfile::from_rankings(n, &rankings)?)
}
