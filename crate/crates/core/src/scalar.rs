//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate is generic over [`Scalar`], which bundles
//! the `num-traits` float machinery the kernels need. `f32` and `f64` are the
//! two instantiations; 64-bit is the default used by the CLI and fixtures
//! because the gradient-check tolerances assume double precision.

use std::fmt::{Debug, Display};

/// Floating-point scalar used throughout the crate.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lossy cast from `f64` literals into the working scalar type.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from(x).expect("f64 -> Scalar cast")
}

/// Widen a scalar back to `f64`, e.g. for serialization and reporting.
#[inline]
pub fn widen<T: Scalar>(x: T) -> f64 {
    x.to_f64().expect("Scalar -> f64 cast")
}
