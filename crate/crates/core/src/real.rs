//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used by the grid, operator, semigroup and tent code.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate are
/// calibrated for `f64`; `f32` instances are useful for smoke runs only.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x^k` for a nonnegative integer exponent with the convention `0^0 = 1`.
pub(crate) fn powi<T: Real>(x: T, k: u32) -> T {
    let mut acc = T::one();
    for _ in 0..k {
        acc *= x;
    }
    acc
}
