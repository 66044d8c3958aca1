//! Counter-based SplitMix64 hashing.
//!
//! Every random draw is a pure function of `(seed, stream, counter)`, so
//! noise can be generated per pixel in any order and reproduces bit-for-bit
//! on every platform.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A keyed, stateless generator: `u64_at(stream, counter)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed.wrapping_add(GOLDEN_GAMMA)),
        }
    }

    #[inline]
    pub fn u64_at(&self, stream: u64, counter: u64) -> u64 {
        let s = mix64(self.key ^ stream.wrapping_mul(GOLDEN_GAMMA));
        mix64(s.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn unit_at(&self, stream: u64, counter: u64) -> f64 {
        (self.u64_at(stream, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`, unbiased (rejection on the top bits).
    pub fn below(&self, stream: u64, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % bound);
        (0..)
            .map(|i| self.u64_at(stream, i))
            .find(|&x| x < zone)
            .map(|x| x % bound)
            .unwrap()
    }
}
