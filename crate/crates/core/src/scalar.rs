use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point type the estimation and control math is written against.
///
/// Implemented for `f32` and `f64`. Everything in this crate that does
/// arithmetic is generic over it; the simulation harness uses `f64`.
pub trait Real:
    'static
    + Copy
    + Send
    + Sync
    + Default
    + Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
{
    /// Converts a literal constant. Panics only if the value cannot be
    /// represented at all, which never happens for the constants used here.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Clamps `v` into `[lo, hi]`. NaN passes through unchanged.
#[inline]
pub fn clamp<T: Real>(v: T, lo: T, hi: T) -> T {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

/// A value that may have been forced into an admissible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped<T> {
    pub value: T,
    pub saturated: bool,
}

impl<T: Real> Clamped<T> {
    pub fn within(v: T, lo: T, hi: T) -> Self {
        let value = clamp(v, lo, hi);
        Clamped {
            value,
            saturated: value != v,
        }
    }
}
