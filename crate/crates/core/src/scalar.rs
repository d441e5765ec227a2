//! Scalar abstraction so the numerics run in f32 or f64.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar used throughout the library.
///
/// Everything is written against this trait; `f64` is what the binary and the
/// acceptance tests instantiate, `f32` exists to keep the code honest about
/// precision assumptions.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from a literal. Panics only if the literal is not
    /// representable at all, which does not happen for the constants used here.
    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;

    fn half() -> Self {
        Self::of(0.5)
    }

    fn two() -> Self {
        Self::of(2.0)
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Shorthand for `R::of` at call sites with heavy literal use.
pub fn of<R: Real>(x: f64) -> R {
    R::of(x)
}
