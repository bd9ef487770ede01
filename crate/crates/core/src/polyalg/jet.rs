//! Multivariate truncated Taylor series without angular dependence.
//!
//! These are the pointwise objects: a [`super::Series`] sampled at a fixed
//! angle, or the state of a jet-transported ODE integrator.

use std::sync::Arc;

use super::elementary::{taylor_coefficients, Elementary, TruncatedAlgebra};
use super::monomials::Monomials;
use super::scalar::Scalar;
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct Jet<T: Scalar> {
    mons: Arc<Monomials>,
    c: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn zeros(nvars: usize, sigma: usize) -> Self {
        let mons = Monomials::get(nvars, sigma);
        let c = vec![T::zero(); mons.len()];
        Jet { mons, c }
    }

    pub fn from_coeffs(mons: Arc<Monomials>, c: Vec<T>) -> Self {
        assert_eq!(mons.len(), c.len());
        Jet { mons, c }
    }

    pub fn constant(nvars: usize, sigma: usize, v: T) -> Self {
        let mut j = Self::zeros(nvars, sigma);
        j.c[0] = v;
        j
    }

    /// `value + x_var`: the seed used to start jet transport.
    pub fn variable(nvars: usize, sigma: usize, var: usize, value: T) -> Self {
        let mut j = Self::constant(nvars, sigma, value);
        if sigma >= 1 {
            j.c[1 + var] = T::one();
        }
        j
    }

    pub fn monomials(&self) -> &Arc<Monomials> {
        &self.mons
    }

    pub fn nvars(&self) -> usize {
        self.mons.nvars()
    }

    pub fn sigma(&self) -> usize {
        self.mons.sigma()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.c
    }

    pub fn constant_term(&self) -> T {
        self.c[0]
    }

    pub fn lowest_degree(&self) -> Option<usize> {
        let first = self.c.iter().position(|v| !v.is_zero())?;
        Some(self.mons.degree(first))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += *b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&other.c) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        out.c.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: T, other: &Self) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += s * *b;
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_trunc(other, self.sigma())
    }

    /// Product truncated at total degree `max_degree`.
    pub fn mul_trunc(&self, other: &Self, max_degree: usize) -> Self {
        let mut out = Jet {
            mons: self.mons.clone(),
            c: vec![T::zero(); self.c.len()],
        };
        let (Some(la), Some(lb)) = (self.lowest_degree(), other.lowest_degree()) else {
            return out;
        };
        let t = &*self.mons;
        let top = max_degree.min(t.sigma());
        for da in la..=top {
            if da + lb > top {
                break;
            }
            for i in t.degree_range(da) {
                let a = self.c[i];
                if a.is_zero() {
                    continue;
                }
                let row = t.product_row(i);
                let hi = t.count_up_to(top - da);
                let lo = t.degree_range(lb).start;
                for j in lo..hi {
                    out.c[row[j] as usize] += a * other.c[j];
                }
            }
        }
        out
    }

    pub fn eval(&self, x: &[T]) -> T {
        let pw = self.mons.powers(x);
        self.c.iter().zip(&pw).fold(T::zero(), |acc, (c, p)| acc + *c * *p)
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let t = &*self.mons;
        let mut out = Jet::zeros(t.nvars(), t.sigma());
        let mut e = vec![0u8; t.nvars()];
        for m in 1..t.len() {
            let ex = t.exponents(m);
            if ex[var] == 0 || self.c[m].is_zero() {
                continue;
            }
            e.copy_from_slice(ex);
            e[var] -= 1;
            let idx = t.index_of(&e).unwrap();
            out.c[idx] += self.c[m] * T::from_f64(ex[var] as f64);
        }
        out
    }

    /// `sum_p coeffs[p] * (self - self(0))^p`, truncated.
    pub fn compose_univariate(&self, coeffs: &[T]) -> Self {
        let mut h = self.clone();
        h.c[0] = T::zero();
        let top = coeffs.len() - 1;
        let mut acc = Jet::constant(self.nvars(), self.sigma(), coeffs[top]);
        for p in (0..top).rev() {
            acc = acc.mul(&h);
            acc.c[0] += coeffs[p];
        }
        acc
    }

    pub fn apply_elementary(&self, op: Elementary) -> Result<Self> {
        let coeffs = taylor_coefficients(op, self.c[0], self.sigma())?;
        Ok(self.compose_univariate(&coeffs))
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }
}

impl<T: Scalar> TruncatedAlgebra for Jet<T> {
    fn constant_like(&self, c: f64) -> Self {
        Jet::constant(self.nvars(), self.sigma(), T::from_f64(c))
    }
    fn add(&self, other: &Self) -> Self {
        Jet::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        Jet::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Jet::mul(self, other)
    }
    fn scale(&self, c: f64) -> Self {
        Jet::scale(self, T::from_f64(c))
    }
    fn offset(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.c[0] += T::from_f64(c);
        out
    }
    fn apply(&self, op: Elementary) -> Result<Self> {
        self.apply_elementary(op)
    }
}
