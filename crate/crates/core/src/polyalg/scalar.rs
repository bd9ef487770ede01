use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub type C64 = Complex64;

/// Coefficient field of a jet: `f64` for real flows, `Complex64` after
/// Fourier synthesis or complex diagonalisation.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn modulus(self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powf(self, a: f64) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn to_c64(self) -> C64;
    fn is_zero(self) -> bool {
        self == Self::zero()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn powf(self, a: f64) -> Self {
        f64::powf(self, a)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_f64(v: f64) -> Self {
        C64::new(v, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    fn powf(self, a: f64) -> Self {
        Complex64::powf(self, a)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn to_c64(self) -> C64 {
        self
    }
}
