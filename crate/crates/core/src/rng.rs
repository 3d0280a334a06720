//! Seeded random streams.
//!
//! All randomness in the toolkit flows through [`SeededRng`], a thin wrapper
//! over xoshiro256++ (seeded from a `u64` through SplitMix64, as implemented by
//! `rand_xoshiro`). Derived draws are spelled out here so that other
//! implementations can reproduce them bit for bit:
//!
//! * `unit()` takes the top 53 bits of the next output: `(x >> 11) * 2^-53`.
//! * `below(n)` is the multiply-shift reduction `(x as u128 * n) >> 64`.
//! * `shuffle` is Fisher-Yates running from the last slot down to slot 1,
//!   swapping slot `i` with `below(i + 1)`.
//!
//! Independent streams for the same user seed are obtained with
//! [`SeededRng::stream`], which mixes a fixed salt into the seed.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Salt for the stream that initializes factor matrices.
pub const INIT_STREAM: u64 = 0x494e_4954;
/// Salt for the stream that samples SGD training points.
pub const SAMPLE_STREAM: u64 = 0x5341_4d50;
/// Salt for the stream that shuffles train/test splits.
pub const SPLIT_STREAM: u64 = 0x5350_4c54;
/// Salt for Louvain visit-order permutations.
pub const GRAPH_STREAM: u64 = 0x4752_5048;
/// Salt for initial layout positions.
pub const LAYOUT_STREAM: u64 = 0x4c41_594f;

/// SplitMix64 finalizer. Bijective on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps a 64-bit word onto `[0, 1)` using its top 53 bits.
pub fn unit_from_bits(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: Xoshiro256PlusPlus,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// A stream keyed by `(seed, salt)`, independent of other salts.
    pub fn stream(seed: u64, salt: u64) -> Self {
        Self::new(mix64(seed ^ mix64(salt)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        unit_from_bits(self.next_u64())
    }

    /// Uniform index in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// A random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        self.shuffle(&mut order);
        order
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn salts_separate_streams() {
        let mut a = SeededRng::stream(7, INIT_STREAM);
        let mut b = SeededRng::stream(7, SAMPLE_STREAM);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn below_stays_in_range() {
        let mut r = SeededRng::new(1);
        for n in 1..50 {
            for _ in 0..50 {
                assert!(r.below(n) < n);
            }
        }
    }

    #[test]
    fn permutation_is_a_permutation() {
        let mut r = SeededRng::new(3);
        let mut p = r.permutation(100);
        p.sort_unstable();
        assert_eq!(p, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn unit_in_half_open_interval() {
        assert_eq!(unit_from_bits(0), 0.0);
        assert!(unit_from_bits(u64::MAX) < 1.0);
    }
}
