//! Scalar abstraction shared by the numerical modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every numerical routine in the crate.
///
/// Implemented for `f32` and `f64`. Linear algebra goes through nalgebra's
/// `RealField`; conversions go through num-traits.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + serde::Serialize + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: RealField + Copy + FromPrimitive + ToPrimitive + serde::Serialize + Send + Sync + 'static
{
}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in the scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn from_usize<T: Real>(x: usize) -> T {
    T::from_usize(x).expect("count representable in the scalar type")
}

/// Lossy conversion to `f64` for reporting and error payloads.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
