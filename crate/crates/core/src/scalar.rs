//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `k * ln(x)` with the convention `0 * ln(0) = 0`.
#[inline]
pub(crate) fn xlogy<T: Real>(k: T, x: T) -> T {
    if k == T::zero() {
        T::zero()
    } else {
        k * x.ln()
    }
}

#[inline]
pub(crate) fn clamp_unit<T: Real>(x: T) -> T {
    // `max` first so that a NaN never slips through as a probability.
    let x = if x > T::zero() { x } else { T::zero() };
    if x < T::one() {
        x
    } else {
        T::one()
    }
}
