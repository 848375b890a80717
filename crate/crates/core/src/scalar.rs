use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar used throughout the crate (f32 or f64).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an f64 literal. Every literal we use is representable in f32.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute tolerance that is meaningful for this precision.
    fn tiny() -> Self;

    /// Allowed drift of a sum of `n` normalized weights from one: 1e-9, or the
    /// rounding of `n` additions at this precision if that is larger.
    fn sum_tolerance(n: usize) -> f64 {
        1e-9f64.max(4.0 * n as f64 * Self::epsilon().to_f64_lossy())
    }
}

impl Real for f32 {
    #[inline]
    fn tiny() -> Self {
        1e-6
    }
}

impl Real for f64 {
    #[inline]
    fn tiny() -> Self {
        1e-12
    }
}
