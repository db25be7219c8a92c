//! Scalar abstraction for the dense math in this crate.
//!
//! Every tensor operation is generic over [`Scalar`] so the same code runs in
//! single or double precision. The pipeline itself uses `f32` value semantics
//! (see the aliases at the crate root); `f64` instantiations exist mainly for
//! oracles and cross-checks. Reductions always accumulate in `f64` no matter
//! which scalar the values use.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable in tensors: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossless widening to the accumulator type.
    fn to_acc(self) -> f64;

    /// Rounding conversion from the accumulator type.
    fn from_acc(v: f64) -> Self;
}

impl Scalar for f32 {
    fn to_acc(self) -> f64 {
        self as f64
    }

    fn from_acc(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    fn to_acc(self) -> f64 {
        self
    }

    fn from_acc(v: f64) -> Self {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn widen_then_narrow<T: Scalar>(x: T) -> T {
        T::from_acc(x.to_acc())
    }

    #[test]
    fn round_trip_is_exact_for_both_scalars() {
        assert_eq!(widen_then_narrow(1.25f32), 1.25f32);
        assert_eq!(widen_then_narrow(-3.0e-7f64), -3.0e-7f64);
    }
}
