//! Univariate Taylor data for the elementary functions that can be lifted
//! onto truncated series, and the algebra trait the vector-field recipes are
//! written against.

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Smallest admissible modulus of the expansion point for functions with a
/// singularity at zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementary {
    Recip,
    Sqrt,
    Pow(f64),
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Elementary {
    fn singular_at_zero(self) -> bool {
        match self {
            Elementary::Recip | Elementary::Sqrt | Elementary::Ln => true,
            Elementary::Pow(a) => !(a >= 0.0 && a.fract() == 0.0),
            _ => false,
        }
    }

    pub fn eval<T: Scalar>(self, a: T) -> T {
        match self {
            Elementary::Recip => T::one() / a,
            Elementary::Sqrt => a.sqrt(),
            Elementary::Pow(p) => a.powf(p),
            Elementary::Sin => a.sin(),
            Elementary::Cos => a.cos(),
            Elementary::Exp => a.exp(),
            Elementary::Ln => a.ln(),
        }
    }
}

/// `f^(p)(a0) / p!` for `p = 0..=order`.
pub fn taylor_coefficients<T: Scalar>(op: Elementary, a0: T, order: usize) -> Result<Vec<T>> {
    if op.singular_at_zero() && a0.modulus() < SINGULAR_THRESHOLD {
        return Err(Error::SingularJet(format!(
            "{op:?} expanded at a point of modulus {:.3e}",
            a0.modulus()
        )));
    }
    let mut c = Vec::with_capacity(order + 1);
    match op {
        Elementary::Recip => {
            let inv = T::one() / a0;
            let mut term = inv;
            for _ in 0..=order {
                c.push(term);
                term = -(term * inv);
            }
        }
        Elementary::Sqrt | Elementary::Pow(_) => {
            let alpha = if let Elementary::Pow(a) = op { a } else { 0.5 };
            let inv = T::one() / a0;
            let mut term = a0.powf(alpha);
            let mut binom = 1.0;
            for p in 0..=order {
                c.push(term * T::from_f64(binom));
                binom *= (alpha - p as f64) / (p as f64 + 1.0);
                term *= inv;
            }
        }
        Elementary::Sin | Elementary::Cos => {
            let (s, co) = (a0.sin(), a0.cos());
            let cycle = if op == Elementary::Sin { [s, co, -s, -co] } else { [co, -s, -co, s] };
            let mut fact = 1.0;
            for p in 0..=order {
                if p > 0 {
                    fact *= p as f64;
                }
                c.push(cycle[p % 4] * T::from_f64(1.0 / fact));
            }
        }
        Elementary::Exp => {
            let e = a0.exp();
            let mut fact = 1.0;
            for p in 0..=order {
                if p > 0 {
                    fact *= p as f64;
                }
                c.push(e * T::from_f64(1.0 / fact));
            }
        }
        Elementary::Ln => {
            c.push(a0.ln());
            let inv = T::one() / a0;
            let mut pw = inv;
            for p in 1..=order {
                let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
                c.push(pw * T::from_f64(sign / p as f64));
                pw *= inv;
            }
        }
    }
    Ok(c)
}

/// Arithmetic needed to write a vector field once and evaluate it on plain
/// numbers, pointwise jets, or power–Fourier series.
pub trait TruncatedAlgebra: Clone {
    fn constant_like(&self, c: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn offset(&self, c: f64) -> Self;
    fn apply(&self, op: Elementary) -> Result<Self>;

    fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.apply(Elementary::Recip)?))
    }
    fn square(&self) -> Self {
        self.mul(self)
    }
}

impl TruncatedAlgebra for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn offset(&self, c: f64) -> Self {
        self + c
    }
    fn apply(&self, op: Elementary) -> Result<Self> {
        if op.singular_at_zero() && self.abs() < SINGULAR_THRESHOLD {
            return Err(Error::SingularJet(format!("{op:?} at {self:.3e}")));
        }
        Ok(op.eval(*self))
    }
    fn div(&self, other: &Self) -> Result<Self> {
        if other.abs() < SINGULAR_THRESHOLD {
            return Err(Error::SingularJet(format!("division by {other:.3e}")));
        }
        Ok(self / other)
    }
}
