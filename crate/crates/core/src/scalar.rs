//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the solver and engine are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances are expressed as `f64`
/// literals and converted through [`lit`], then floored at a small multiple
/// of the type's epsilon so that single precision stays meaningful.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Display + LowerExp + Debug
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Machine epsilon of `T`.
#[inline]
pub fn epsilon<T: Scalar>() -> T {
    T::default_epsilon()
}

/// `max(tol, factor * eps)`: a tolerance that does not underflow the
/// precision of `T`.
#[inline]
pub fn tol<T: Scalar>(tol: f64, eps_factor: f64) -> T {
    let t = lit::<T>(tol);
    let floor = epsilon::<T>() * lit::<T>(eps_factor);
    if t > floor {
        t
    } else {
        floor
    }
}

#[inline]
pub fn infinity<T: Scalar>() -> T {
    lit(f64::INFINITY)
}

#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_floors_at_epsilon() {
        assert_eq!(tol::<f64>(1e-9, 10.0), 1e-9);
        let t32: f32 = tol(1e-12, 10.0);
        assert!(t32 >= 10.0 * f32::EPSILON);
    }

    #[test]
    fn infinity_is_infinite() {
        assert!(infinity::<f32>().is_infinite());
        assert!(infinity::<f64>() > 1e300);
    }
}
