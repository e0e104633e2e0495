//! Deterministic seed derivation.
//!
//! Every random stream in a run is keyed by a 64-bit seed derived from the
//! master seed and a path of indices, so that no two cells or purposes share
//! a stream and results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags for the independent random processes inside one run.
pub mod stream {
    pub const NETWORK: u64 = 0x6e65_7477;
    pub const INPUT_WEIGHTS: u64 = 0x696e_7077;
    pub const SHUFFLE: u64 = 0x7368_7566;
    pub const TASK: u64 = 0x7461_736b;
    pub const TARGETS: u64 = 0x7267_7473;
    pub const ADAPT_INPUT: u64 = 0x6164_6170;
    pub const PAIRS: u64 = 0x7061_6972;
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`, order-sensitively.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(base: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, &[tag]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derived_seeds_are_distinct_over_a_grid() {
        let mut seen = HashSet::new();
        for cell in 0..50u64 {
            for rep in 0..100u64 {
                assert!(seen.insert(derive(7, &[cell, rep])));
            }
        }
    }

    #[test]
    fn derivation_is_order_sensitive() {
        assert_ne!(derive(1, &[2, 3]), derive(1, &[3, 2]));
        assert_eq!(derive(1, &[2, 3]), derive(1, &[2, 3]));
    }
}
