//! Scalar abstraction for the numeric core.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the metric and model math is generic over:
/// `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Convert a count; rounds if the mantissa cannot hold it.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }

    /// Narrowing conversion from `f64` (exact for `f64`, rounded for `f32`).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 convertible to scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}
