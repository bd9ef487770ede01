//! Scalar mixed power–Fourier series `sum_{m,k} c[m,k] x^m e^{i k theta}`.

use std::f64::consts::PI;
use std::sync::Arc;

use super::elementary::{Elementary, TruncatedAlgebra};
use super::jet::Jet;
use super::monomials::Monomials;
use super::scalar::{Scalar, C64};
use crate::error::Result;

/// Number of collocation angles used when a series is sent to the angle grid.
pub fn grid_size(ell: usize) -> usize {
    4 * ell + 1
}

pub fn grid_angles(m: usize) -> Vec<f64> {
    (0..m).map(|q| 2.0 * PI * q as f64 / m as f64).collect()
}

#[derive(Clone, Debug)]
pub struct Series {
    mons: Arc<Monomials>,
    ell: usize,
    c: Vec<C64>,
}

impl Series {
    pub fn zeros(nvars: usize, sigma: usize, ell: usize) -> Self {
        let mons = Monomials::get(nvars, sigma);
        let c = vec![C64::zero(); mons.len() * (2 * ell + 1)];
        Series { mons, ell, c }
    }

    pub fn constant(nvars: usize, sigma: usize, ell: usize, v: C64) -> Self {
        let mut s = Self::zeros(nvars, sigma, ell);
        s.set(0, 0, v);
        s
    }

    pub fn variable(nvars: usize, sigma: usize, ell: usize, var: usize) -> Self {
        let mut s = Self::zeros(nvars, sigma, ell);
        if sigma >= 1 {
            s.set(1 + var, 0, C64::one());
        }
        s
    }

    /// A function of the angle only, given its harmonics `-l..=l`.
    pub fn from_fourier(nvars: usize, sigma: usize, ell: usize, harmonics: &[C64]) -> Self {
        let mut s = Self::zeros(nvars, sigma, ell);
        let l_in = (harmonics.len() - 1) / 2;
        for (i, &h) in harmonics.iter().enumerate() {
            let k = i as i64 - l_in as i64;
            if k.unsigned_abs() as usize <= ell {
                s.set(0, k, h);
            }
        }
        s
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

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn nh(&self) -> usize {
        2 * self.ell + 1
    }

    pub fn data(&self) -> &[C64] {
        &self.c
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.c
    }

    #[inline]
    fn idx(&self, m: usize, k: i64) -> usize {
        m * self.nh() + (k + self.ell as i64) as usize
    }

    pub fn get(&self, m: usize, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.ell {
            return C64::zero();
        }
        self.c[self.idx(m, k)]
    }

    pub fn set(&mut self, m: usize, k: i64, v: C64) {
        let i = self.idx(m, k);
        self.c[i] = v;
    }

    pub fn add_at(&mut self, m: usize, k: i64, v: C64) {
        let i = self.idx(m, k);
        self.c[i] += v;
    }

    /// Harmonics `-l..=l` of monomial `m`.
    pub fn fourier(&self, m: usize) -> &[C64] {
        let nh = self.nh();
        &self.c[m * nh..(m + 1) * nh]
    }

    pub fn fourier_mut(&mut self, m: usize) -> &mut [C64] {
        let nh = self.nh();
        &mut self.c[m * nh..(m + 1) * nh]
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|v| v.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn monomial_nonzero(&self) -> Vec<bool> {
        let nh = self.nh();
        self.c.chunks(nh).map(|ch| ch.iter().any(|v| !v.is_zero())).collect()
    }

    pub fn lowest_degree(&self) -> Option<usize> {
        let nh = self.nh();
        let first = self.c.chunks(nh).position(|ch| ch.iter().any(|v| !v.is_zero()))?;
        Some(self.mons.degree(first))
    }

    /// Re-embed with another order and Fourier truncation (same variables).
    pub fn resized(&self, sigma: usize, ell: usize) -> Self {
        if sigma == self.sigma() && ell == self.ell {
            return self.clone();
        }
        let mut out = Series::zeros(self.nvars(), sigma, ell);
        let n = self.mons.len().min(out.mons.len());
        let lmin = self.ell.min(ell) as i64;
        for m in 0..n {
            for k in -lmin..=lmin {
                out.set(m, k, self.get(m, k));
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.c.len(), other.c.len());
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += *b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn sub_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.c.len(), other.c.len());
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a -= *b;
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.c.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &Self) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += s * *b;
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_trunc(other, self.sigma())
    }

    /// Product with monomials above `max_degree` and harmonics above the
    /// Fourier truncation dropped.
    pub fn mul_trunc(&self, other: &Self, max_degree: usize) -> Self {
        assert_eq!(self.c.len(), other.c.len(), "series shapes differ");
        let mut out = Series {
            mons: self.mons.clone(),
            ell: self.ell,
            c: vec![C64::zero(); self.c.len()],
        };
        let (Some(la), Some(lb)) = (self.lowest_degree(), other.lowest_degree()) else {
            return out;
        };
        let t = &*self.mons;
        let top = max_degree.min(t.sigma());
        let nh = self.nh();
        let l = self.ell;
        let nz_b = other.monomial_nonzero();
        for da in la..=top {
            if da + lb > top {
                break;
            }
            for i in t.degree_range(da) {
                let a = &self.c[i * nh..(i + 1) * nh];
                if a.iter().all(|v| v.is_zero()) {
                    continue;
                }
                let row = t.product_row(i);
                let hi = t.count_up_to(top - da);
                let lo = t.degree_range(lb).start;
                for j in lo..hi {
                    if !nz_b[j] {
                        continue;
                    }
                    let b = &other.c[j * nh..(j + 1) * nh];
                    let o = row[j] as usize * nh;
                    convolve_into(a, b, l, &mut out.c[o..o + nh]);
                }
            }
        }
        out
    }

    /// Multiply by a function of the angle given by its harmonics.
    pub fn mul_fourier(&self, f: &[C64]) -> Self {
        let lf = (f.len() - 1) / 2;
        let mut g = vec![C64::zero(); self.nh()];
        for (i, &v) in f.iter().enumerate() {
            let k = i as i64 - lf as i64;
            if k.unsigned_abs() as usize <= self.ell {
                g[(k + self.ell as i64) as usize] = v;
            }
        }
        let mut out = Series::zeros(self.nvars(), self.sigma(), self.ell);
        let nh = self.nh();
        for m in 0..self.mons.len() {
            let a = &self.c[m * nh..(m + 1) * nh];
            if a.iter().all(|v| v.is_zero()) {
                continue;
            }
            convolve_into(a, &g, self.ell, &mut out.c[m * nh..(m + 1) * nh]);
        }
        out
    }

    /// `result(x, theta) = self(x, theta - delta)`.
    pub fn shift(&self, delta: f64) -> Self {
        let mut out = self.clone();
        let nh = self.nh();
        let rot: Vec<C64> = (0..nh)
            .map(|i| C64::from_polar(1.0, -((i as f64) - self.ell as f64) * delta))
            .collect();
        for ch in out.c.chunks_mut(nh) {
            for (v, r) in ch.iter_mut().zip(&rot) {
                *v *= *r;
            }
        }
        out
    }

    /// Polynomial in `x` obtained by summing the harmonics at `theta`.
    pub fn at_theta(&self, theta: f64) -> Jet<C64> {
        let nh = self.nh();
        let tw: Vec<C64> = (0..nh)
            .map(|i| C64::from_polar(1.0, ((i as f64) - self.ell as f64) * theta))
            .collect();
        let c = self
            .c
            .chunks(nh)
            .map(|ch| ch.iter().zip(&tw).fold(C64::zero(), |acc, (a, b)| acc + *a * *b))
            .collect();
        Jet::from_coeffs(self.mons.clone(), c)
    }

    pub fn eval(&self, x: &[C64], theta: f64) -> C64 {
        self.at_theta(theta).eval(x)
    }

    pub fn to_grid(&self, m: usize) -> Vec<Jet<C64>> {
        grid_angles(m).into_iter().map(|th| self.at_theta(th)).collect()
    }

    /// Discrete Fourier analysis of samples on a uniform angle grid.
    pub fn from_grid(samples: &[Jet<C64>], ell: usize) -> Self {
        let mgrid = samples.len();
        assert!(mgrid >= 1);
        let mons = samples[0].monomials().clone();
        let mut out = Series {
            ell,
            c: vec![C64::zero(); mons.len() * (2 * ell + 1)],
            mons,
        };
        let nh = 2 * ell + 1;
        let angles = grid_angles(mgrid);
        for (q, jet) in samples.iter().enumerate() {
            let tw: Vec<C64> = (0..nh)
                .map(|i| C64::from_polar(1.0 / mgrid as f64, -((i as f64) - ell as f64) * angles[q]))
                .collect();
            for (m, v) in jet.coeffs().iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let dst = &mut out.c[m * nh..(m + 1) * nh];
                for (d, t) in dst.iter_mut().zip(&tw) {
                    *d += *v * *t;
                }
            }
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Self {
        let t = &*self.mons;
        let mut out = Series::zeros(t.nvars(), t.sigma(), self.ell);
        let nh = self.nh();
        let mut e = vec![0u8; t.nvars()];
        for m in 1..t.len() {
            let ex = t.exponents(m);
            if ex[var] == 0 {
                continue;
            }
            e.copy_from_slice(ex);
            e[var] -= 1;
            let idx = t.index_of(&e).unwrap();
            let f = ex[var] as f64;
            for k in 0..nh {
                out.c[idx * nh + k] += self.c[m * nh + k] * f;
            }
        }
        out
    }

    pub fn theta_derivative(&self) -> Self {
        let mut out = self.clone();
        let nh = self.nh();
        for ch in out.c.chunks_mut(nh) {
            for (i, v) in ch.iter_mut().enumerate() {
                *v *= C64::new(0.0, i as f64 - self.ell as f64);
            }
        }
        out
    }

    /// Only the monomials of degree `d`.
    pub fn degree_part(&self, d: usize) -> Self {
        let mut out = Series::zeros(self.nvars(), self.sigma(), self.ell);
        let nh = self.nh();
        let r = self.mons.degree_range(d);
        out.c[r.start * nh..r.end * nh].copy_from_slice(&self.c[r.start * nh..r.end * nh]);
        out
    }

    /// Zero every monomial above degree `d`.
    pub fn truncate_degree(&mut self, d: usize) {
        let nh = self.nh();
        let start = self.mons.count_up_to(d);
        if d < self.sigma() {
            self.c[start * nh..].iter_mut().for_each(|v| *v = C64::zero());
        }
    }

    /// Complex conjugate of the function for real arguments:
    /// harmonic `k` becomes the conjugate of harmonic `-k`.
    pub fn conj_function(&self) -> Self {
        let mut out = self.clone();
        let nh = self.nh();
        for (dst, src) in out.c.chunks_mut(nh).zip(self.c.chunks(nh)) {
            for i in 0..nh {
                dst[i] = src[nh - 1 - i].conj();
            }
        }
        out
    }

    fn apply_on_grid(&self, op: Elementary) -> Result<Self> {
        let m = grid_size(self.ell);
        let samples = self
            .to_grid(m)
            .into_iter()
            .map(|j| j.apply_elementary(op))
            .collect::<Result<Vec<_>>>()?;
        Ok(Series::from_grid(&samples, self.ell))
    }
}

/// `out[k] += sum_{i+j=k} a[i] b[j]` for harmonics `-l..=l`.
#[inline]
pub(crate) fn convolve_into(a: &[C64], b: &[C64], l: usize, out: &mut [C64]) {
    let nh = 2 * l + 1;
    for ia in 0..nh {
        let av = a[ia];
        if av.is_zero() {
            continue;
        }
        let lo = l.saturating_sub(ia);
        let hi = (3 * l).saturating_sub(ia).min(nh - 1);
        for ib in lo..=hi {
            out[ia + ib - l] += av * b[ib];
        }
    }
}

impl TruncatedAlgebra for Series {
    fn constant_like(&self, c: f64) -> Self {
        Series::constant(self.nvars(), self.sigma(), self.ell, C64::new(c, 0.0))
    }
    fn add(&self, other: &Self) -> Self {
        Series::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        Series::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Series::mul(self, other)
    }
    fn scale(&self, c: f64) -> Self {
        Series::scale(self, C64::new(c, 0.0))
    }
    fn offset(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.add_at(0, 0, C64::new(c, 0.0));
        out
    }
    fn apply(&self, op: Elementary) -> Result<Self> {
        self.apply_on_grid(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn shift_by_pi_negates_first_harmonic() {
        let mut s = Series::zeros(1, 2, 2);
        s.set(0, 1, c(1.0));
        let t = s.shift(PI);
        assert!((t.get(0, 1) + c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn product_truncates_harmonics() {
        // (x e^{i theta})^2 = x^2 e^{2 i theta}, dropped when l = 1
        let mut a = Series::zeros(1, 2, 1);
        a.set(1, 1, c(1.0));
        assert!(a.mul(&a).is_zero());
        let mut b = Series::zeros(1, 2, 2);
        b.set(1, 1, c(1.0));
        let p = b.mul(&b);
        assert!((p.get(2, 2) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn grid_round_trip_is_exact_for_band_limited_data() {
        let mut s = Series::zeros(2, 2, 3);
        for (i, v) in s.data_mut().iter_mut().enumerate() {
            *v = C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        let back = Series::from_grid(&s.to_grid(grid_size(3)), 3);
        assert!(back.sub(&s).max_abs() < 1e-13);
    }

    #[test]
    fn theta_dependent_recip() {
        // 1 / (2 + cos theta) against pointwise evaluation
        let mut s = Series::constant(1, 1, 12, c(2.0));
        s.set(0, 1, c(0.5));
        s.set(0, -1, c(0.5));
        let r = s.apply(Elementary::Recip).unwrap();
        for th in [0.0, 0.7, 2.0] {
            let v = r.eval(&[C64::zero()], th);
            assert!((v - c(1.0 / (2.0 + f64::cos(th)))).norm() < 1e-6);
        }
    }
}
