//! Scalar abstraction: all core math is generic over the real scalar type.
//!
//! Concrete aliases for the `f64` instantiation live at the crate root.

use num_complex::Complex;

/// Real scalar usable throughout the crate: `f32` or `f64`.
///
/// Bundles the nalgebra field operations with conversion from literal
/// `f64` constants. The fixed tolerances quoted in this crate's
/// documentation assume `f64`; `f32` works but with correspondingly
/// looser precision.
pub trait Real:
    nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy + Default
{
    /// Shorthand for converting an `f64` literal.
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("finite f64 literal")
    }

    /// 2π.
    fn tau() -> Self {
        Self::of(std::f64::consts::TAU)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// i as a complex constant.
pub fn im<T: Real>() -> C<T> {
    C::new(T::zero(), T::one())
}

/// Real constant promoted to complex.
pub fn re<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}
