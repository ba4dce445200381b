//! Counter-based deterministic RNG with labeled substreams.
//!
//! The generator is a SplitMix-style 64-bit mixer evaluated at
//! `base + counter * golden`, where `base` is derived from the (seed, label)
//! pair by hashing the label text. Identical (seed, label) pairs produce
//! identical sequences on every platform; distinct labels give streams that
//! are independent for practical purposes.

use crate::error::{Error, Result};
use crate::hash::xxh64;

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// A single-owner deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    label: String,
    base: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        RngStream {
            seed,
            label: label.to_owned(),
            base: xxh64(label.as_bytes(), seed),
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Derive an independent stream; does not consume state of `self`.
    pub fn substream(&self, label: &str) -> RngStream {
        RngStream::new(self.seed, &format!("{}/{}", self.label, label))
    }

    pub fn next_u64(&mut self) -> u64 {
        let k = self.counter;
        self.counter += 1;
        mix(self.base.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`; `lo == hi` returns `lo`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if lo > hi {
            return Err(Error::Contract(format!("uniform: lo {lo} > hi {hi}")));
        }
        if lo == hi {
            return Ok(lo);
        }
        let v = lo + (hi - lo) * self.uniform01();
        Ok(if v < hi { v } else { lo })
    }

    /// Uniform index in `[0, n)`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal draw (Box-Muller; consumes two uniforms).
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform01(); // (0, 1]
        let u2 = self.uniform01();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// A seeded permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}
