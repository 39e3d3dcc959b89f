//! Scalar abstraction for the numeric core.
//!
//! Every algorithm in this crate is written against [`Scalar`] so the same
//! code runs in `f32` or `f64`. The shipped pipeline and the ZMAT file format
//! are double precision; see the concrete aliases at the crate root.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by all numeric routines in this crate.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` constant into this scalar type.
    fn from_f64_const(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 constant converts to scalar")
    }

    /// Widen to `f64` for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + LinalgScalar
        + ScalarOperand
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Shorthand used throughout the crate for converting literals.
pub fn s<T: Scalar>(x: f64) -> T {
    T::from_f64_const(x)
}
