//! Scalar abstraction for the numeric core.
//!
//! Every model in this crate is generic over [`Real`], so the same code runs
//! in `f32` or `f64`. The crate root exports `f64` aliases for the common
//! entry points; `f32` users should widen the solver tolerances accordingly.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar usable by the solvers and analyses.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from a literal; panics only on NaN input.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal converts to any Real")
    }

    /// Widening conversion for reporting and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand used throughout the crate for converting literals.
#[inline]
pub fn of<T: Real>(x: f64) -> T {
    T::of(x)
}
