//! Scalar abstraction: every numerical routine in this crate is generic over
//! a floating-point type implementing [`Real`]. Concrete `f64` aliases for
//! the main types live at the crate root.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for converting an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn r64<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Shorthand for converting a `usize` into the working scalar type.
#[inline]
pub(crate) fn rus<R: Real>(x: usize) -> R {
    R::from_usize(x).expect("usize representable in scalar type")
}
