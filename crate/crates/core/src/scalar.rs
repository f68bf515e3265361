//! Scalar abstraction for the floating-point parts of the crate.
//!
//! All smooth-analysis code (potentials, Legendre maps, quadrature) is
//! generic over [`Scalar`]; the combinatorial code works over exact
//! rationals instead (see [`crate::rational`]).

use std::fmt::{Debug, Display};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumCast
    + num_traits::NumAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64` constants.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from(v).expect("f64 -> Scalar conversion")
    }

    /// Lossy conversion to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        num_traits::NumCast::from(self).expect("Scalar -> f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
