//! Scalar abstraction: the whole crate is generic over the floating-point
//! type through this trait, with `f32` and `f64` as the provided instances.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable in all design computations.
///
/// `nalgebra::RealField` supplies the linear-algebra operations and
/// `num_traits::FromPrimitive` the conversions from literal constants.
pub trait Scalar: nalgebra::RealField + FromPrimitive + Copy {
    /// The `-inf` sentinel used for singular log-determinants.
    fn neg_inf() -> Self;
    /// Whether the value is neither infinite nor NaN.
    fn is_finite_val(self) -> bool;
    /// Smallest positive normal value.
    fn min_pos() -> Self;
    /// Lossy conversion to `f64` for integer bookkeeping.
    fn as_f64(self) -> f64;
}

impl<T> Scalar for T
where
    T: nalgebra::RealField + Float + FromPrimitive + Copy,
{
    fn neg_inf() -> Self {
        Float::neg_infinity()
    }

    fn is_finite_val(self) -> bool {
        Float::is_finite(self)
    }

    fn min_pos() -> Self {
        Float::min_positive_value()
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar convertible to f64")
    }
}

/// Shorthand conversion from an `f64` constant.
#[inline]
pub fn sc<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("constant not representable in scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_and_f64_are_scalars() {
        assert_eq!(sc::<f32>(0.5), 0.5f32);
        assert_eq!(sc::<f64>(0.5), 0.5f64);
        assert!(f64::neg_inf() < f64::MIN);
        assert!(!f32::neg_inf().is_finite_val());
    }
}
