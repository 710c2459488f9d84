//! Scalar abstraction shared by every numerical kernel in the crate.
//!
//! Kernels are written once against [`Real`] and instantiated for `f32` and
//! `f64`. File formats and the command-line driver work in `f64` only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// A real floating-point scalar usable by the factorization kernels.
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
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `sqrt(a^2 + b^2)` without destructive underflow or overflow.
#[inline]
pub(crate) fn hypot<T: Real>(a: T, b: T) -> T {
    a.hypot(b)
}

/// Euclidean norm of a slice, scaled to avoid overflow.
pub(crate) fn norm2<T: Real>(x: &[T]) -> T {
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let ssq: T = x.iter().map(|v| (*v / scale) * (*v / scale)).sum();
    scale * ssq.sqrt()
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}
