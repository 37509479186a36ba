//! Scalar traits shared by the algebraic modules.

use std::fmt;
use std::ops::{AddAssign, MulAssign, Neg};

use nalgebra as na;
use num_complex::Complex;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real: na::RealField + Copy + FromPrimitive + ToPrimitive + fmt::LowerExp {}

impl<T> Real for T where T: na::RealField + Copy + FromPrimitive + ToPrimitive + fmt::LowerExp {}

/// Coefficient ring of polynomial containers. Integer complex numbers
/// qualify, which lets symbol identities be checked exactly.
pub trait Ring: na::Scalar + Copy + Num + Neg<Output = Self> + AddAssign + MulAssign {}

impl<T> Ring for T where T: na::Scalar + Copy + Num + Neg<Output = Self> + AddAssign + MulAssign {}

/// Complex conjugation, the identity on real rings.
pub trait Conj {
    fn conj(&self) -> Self;
}

macro_rules! real_conj {
    ($($t:ty),*) => {$(
        impl Conj for $t {
            fn conj(&self) -> Self {
                *self
            }
        }
    )*};
}
real_conj!(f32, f64, i64);

impl<T: Clone + Num + Neg<Output = T>> Conj for Complex<T> {
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
}

/// Converts an `f64` literal into `T`.
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in the scalar type")
}

/// Converts `T` to `f64` for reporting.
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar converts to f64")
}

/// Absolute tolerance `base` tightened to what the scalar type can resolve.
pub fn tol<T: Real>(base: f64) -> T {
    let eps = to_f64(T::default_epsilon());
    lit(base.max(1e3 * eps))
}

pub fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// The imaginary unit.
pub fn i_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}
