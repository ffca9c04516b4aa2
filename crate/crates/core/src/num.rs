//! Scalar abstraction for the probability and information kernels.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used by the metric and loss computations: f32 or f64.
///
/// Counts stay in integer arithmetic as long as possible; a `Real` enters only
/// at the final division, so every probability is a single correctly-rounded
/// ratio of exact integers.
pub trait Real: Float + FromPrimitive + std::fmt::Debug {
    /// Lossless-as-possible conversion from an integer count.
    fn from_count(c: u64) -> Self {
        Self::from_u64(c).expect("count representable")
    }

    /// Conversion from a product of counts (may exceed u64 in large pools).
    fn from_wide(c: u128) -> Self {
        Self::from_u128(c).expect("count product representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Exact ratio of two integer counts, rounded once at the division.
pub(crate) fn ratio<F: Real>(num: u64, den: u64) -> F {
    debug_assert!(den > 0);
    F::from_count(num) / F::from_count(den)
}
