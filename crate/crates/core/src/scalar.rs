//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`).
///
/// Elementary functions come from [`nalgebra::ComplexField`]; conversions come
/// from `num-traits`.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy + Default {
    /// Converts an `f64` literal, panicking only for non-representable inputs.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("integer representable in scalar type")
    }

    #[inline]
    fn from_i64_lossy(v: i64) -> Self {
        <Self as FromPrimitive>::from_i64(v).expect("integer representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Complex<T> = num_complex::Complex<T>;

/// Modulus of a complex number without requiring `num_traits::Float`.
#[inline]
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}
