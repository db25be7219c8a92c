//! Deterministic seeded value streams for every "seeded" weight in the crate.
//!
//! The generator is the counter-based SplitMix64 construction: draw `i` of a
//! stream with seed `s` is `mix64(s + (i + 1) * GOLDEN)` where `GOLDEN` is the
//! 64-bit golden-ratio increment and `mix64` is the standard SplitMix64
//! finalizer. Every draw is therefore a pure function of `(seed, position)`:
//! no hidden state, identical streams on every platform.
//!
//! Floating point values are derived from the integer stream with IEEE
//! add/multiply only (no transcendentals), so `f32`/`f64` streams are also
//! bit-identical across platforms:
//!
//! * uniforms take the top 53 bits, giving values in `[0, 1)`;
//! * normals use the Irwin-Hall approximation, the sum of 12 uniforms minus
//!   6, which has mean exactly 0, variance exactly 1, and support `[-6, 6]`.

use crate::error::{MochaError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor3;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Deterministic stream of pseudo-random values.
#[derive(Debug, Clone)]
pub struct SeededGenerator {
    seed: u64,
    position: u64,
}

impl SeededGenerator {
    pub fn new(seed: u64) -> Self {
        Self { seed, position: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 64-bit draws consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Independent stream for a named component. The label is hashed with
    /// FNV-1a and remixed into the parent seed, so the same `(seed, label)`
    /// pair always denotes the same stream no matter when it is forked.
    pub fn child(&self, label: &str) -> Self {
        Self::new(mix64(self.seed ^ fnv1a64(label.as_bytes())))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.seed.wrapping_add(self.position.wrapping_mul(GOLDEN)));
        self.position += 1;
        v
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Irwin-Hall, 12 uniforms).
    #[inline]
    pub fn next_normal_f64(&mut self) -> f64 {
        let mut acc = 0.0;
        for _ in 0..12 {
            acc += self.next_unit_f64();
        }
        acc - 6.0
    }

    /// `n` normal draws scaled by `scale`.
    pub fn normal_vec<T: Scalar>(&mut self, n: usize, scale: f64) -> Vec<T> {
        (0..n)
            .map(|_| T::from_acc(self.next_normal_f64() * scale))
            .collect()
    }

    /// `n` uniform draws in `[-bound, bound)`.
    pub fn uniform_vec<T: Scalar>(&mut self, n: usize, bound: f64) -> Vec<T> {
        (0..n)
            .map(|_| T::from_acc((2.0 * self.next_unit_f64() - 1.0) * bound))
            .collect()
    }
}

/// Tensor filled with normal draws of standard deviation `scale`.
///
/// `scale` must be finite and strictly positive.
pub fn seeded_normal<T: Scalar>(
    gen: &mut SeededGenerator,
    channels: usize,
    height: usize,
    width: usize,
    scale: f64,
) -> Result<Tensor3<T>> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(MochaError::Domain(format!(
            "seeded_normal scale must be finite and > 0, got {scale}"
        )));
    }
    let data = gen.normal_vec(channels * height * width, scale);
    Tensor3::new(channels, height, width, data)
}

/// Tensor filled with uniform draws in `[-bound, bound)`.
///
/// `bound` must be finite and strictly positive.
pub fn seeded_uniform<T: Scalar>(
    gen: &mut SeededGenerator,
    channels: usize,
    height: usize,
    width: usize,
    bound: f64,
) -> Result<Tensor3<T>> {
    if !(bound.is_finite() && bound > 0.0) {
        return Err(MochaError::Domain(format!(
            "seeded_uniform bound must be finite and > 0, got {bound}"
        )));
    }
    let data = gen.uniform_vec(channels * height * width, bound);
    Tensor3::new(channels, height, width, data)
}
