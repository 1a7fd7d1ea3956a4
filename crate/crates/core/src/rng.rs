//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every stochastic quantity in the simulator (capacitor mismatch, comparator
//! offsets, per-operation noise, training shuffles) is drawn from a ChaCha
//! stream whose seed is a hash of a base seed and a tuple of integer tags.
//! Two draws never share a stream unless their tags are identical, so the
//! order in which work is scheduled cannot change the result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `tags` into `base` to produce an independent 64-bit seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(base), |acc, &t| mix64(acc ^ mix64(t.wrapping_add(0xA076_1D64_78BD_642F))))
}

/// A ChaCha8 stream keyed by `(base, tags)`.
pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_differ_by_tag_and_order() {
        let a = derive_seed(7, &[1, 2]);
        let b = derive_seed(7, &[2, 1]);
        let c = derive_seed(7, &[1, 2]);
        assert_ne!(a, b);
        assert_eq!(a, c);
        assert_ne!(derive_seed(7, &[]), derive_seed(8, &[]));
    }

    #[test]
    fn streams_are_reproducible() {
        let x: u64 = stream(3, &[4]).random();
        let y: u64 = stream(3, &[4]).random();
        assert_eq!(x, y);
    }
}
