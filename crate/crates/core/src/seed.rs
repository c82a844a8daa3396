//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from the single
//! user seed mixed with a path of integers (cell index, fold, tree number...)
//! through SplitMix64, so streams are independent of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `path` into `base`; distinct paths give unrelated seeds.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_are_distinguished() {
        assert_ne!(derive(7, &[0, 1]), derive(7, &[1, 0]));
        assert_ne!(derive(7, &[]), derive(8, &[]));
        assert_eq!(derive(7, &[3, 4]), derive(7, &[3, 4]));
    }
}
