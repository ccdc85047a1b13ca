//! Scalar abstraction shared by the geometric and reference-element kernels.

use num_traits::{Float, FloatConst};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

/// Real floating point type the mesh, quadrature and basis code is written against.
pub trait Scalar:
    Float + FloatConst + Sum + AddAssign + SubAssign + MulAssign + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Precision is lost for narrower types.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    #[inline]
    fn from_usize(v: usize) -> Self {
        Self::lit(v as f64)
    }

    /// Relative tolerance used by geometric predicates.
    fn geometric_eps() -> Self;
}

impl Scalar for f64 {
    fn geometric_eps() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn geometric_eps() -> Self {
        1e-5
    }
}

/// 2D point or vector.
pub type Point2<T> = [T; 2];

#[inline]
pub fn sub<T: Scalar>(a: Point2<T>, b: Point2<T>) -> Point2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot<T: Scalar>(a: Point2<T>, b: Point2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm<T: Scalar>(a: Point2<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross<T: Scalar>(a: Point2<T>, b: Point2<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn midpoint<T: Scalar>(a: Point2<T>, b: Point2<T>) -> Point2<T> {
    let half = T::lit(0.5);
    [(a[0] + b[0]) * half, (a[1] + b[1]) * half]
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when counter-clockwise.
#[inline]
pub fn orient2d<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    cross(sub(b, a), sub(c, a))
}
