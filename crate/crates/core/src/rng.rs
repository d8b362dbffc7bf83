//! Deterministic PRNG used by every randomized operation in the crate.
//!
//! The generator is xorshift64* (Marsaglia xorshift with Vigna's multiplier),
//! seeded through one round of SplitMix64. Both algorithms are fixed by their
//! published constants, so a given seed reproduces the same stream in any
//! implementation, independent of platform or library versions:
//!
//! - SplitMix64: `z = (x + 0x9E3779B97F4A7C15); z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;`
//!   `z = (z ^ z>>27) * 0x94D049BB133111EB; z ^ z>>31`
//! - xorshift64*: `x ^= x>>12; x ^= x<<25; x ^= x>>27; return x * 0x2545F4914F6CDD1D`

use std::f64::consts::PI;

/// One SplitMix64 step; also used standalone for deriving per-epoch seeds.
#[inline]
pub fn split_mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xorshift64* stream. State is never zero.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        let mut state = split_mix64(seed);
        if state == 0 {
            // xorshift state must be nonzero; remix once more.
            state = split_mix64(0x9E37_79B9_7F4A_7C15);
        }
        Rng { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). n must be positive.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal deviate via Box-Muller. Consumes two uniforms per call.
    pub fn normal(&mut self) -> f64 {
        let mut u1 = self.next_f64();
        if u1 <= 0.0 {
            u1 = f64::MIN_POSITIVE;
        }
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_index(i + 1);
            xs.swap(i, j);
        }
    }

    /// `count` distinct indices from [0, n), in draw order.
    pub fn distinct_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n, "cannot draw {count} distinct indices from {n}");
        let mut picked = vec![false; n];
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let i = self.next_index(n);
            if !picked[i] {
                picked[i] = true;
                out.push(i);
            }
        }
        out
    }
}
