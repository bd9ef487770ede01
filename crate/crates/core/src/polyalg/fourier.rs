//! Functions of the angle alone: vector and matrix valued trigonometric
//! polynomials stored as harmonics `-l..=l`.

use nalgebra::{DMatrix, DVector};

use super::scalar::C64;
use super::series::grid_angles;

/// `sum_k h[k + l] e^{i k theta}`
pub fn eval_harmonics(h: &[C64], theta: f64) -> C64 {
    let l = (h.len() - 1) as f64 / 2.0;
    h.iter()
        .enumerate()
        .fold(C64::new(0.0, 0.0), |acc, (i, v)| acc + *v * C64::from_polar(1.0, (i as f64 - l) * theta))
}

/// Harmonics `-l..=l` of uniformly sampled data.
pub fn harmonics_from_samples(samples: &[C64], ell: usize) -> Vec<C64> {
    let m = samples.len() as f64;
    let angles = grid_angles(samples.len());
    (0..2 * ell + 1)
        .map(|i| {
            let k = i as f64 - ell as f64;
            samples
                .iter()
                .zip(&angles)
                .fold(C64::new(0.0, 0.0), |acc, (s, th)| acc + *s * C64::from_polar(1.0 / m, -k * th))
        })
        .collect()
}

/// Matrix-valued trigonometric polynomial.
#[derive(Clone, Debug)]
pub struct FourierMatrix {
    pub ell: usize,
    pub coeffs: Vec<DMatrix<C64>>,
}

impl FourierMatrix {
    pub fn constant(a: DMatrix<C64>, ell: usize) -> Self {
        let z = DMatrix::zeros(a.nrows(), a.ncols());
        let mut coeffs = vec![z; 2 * ell + 1];
        coeffs[ell] = a;
        FourierMatrix { ell, coeffs }
    }

    pub fn nrows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    /// Harmonic `k`, zero outside the truncation.
    pub fn harmonic(&self, k: i64) -> DMatrix<C64> {
        if k.unsigned_abs() as usize > self.ell {
            DMatrix::zeros(self.nrows(), self.ncols())
        } else {
            self.coeffs[(k + self.ell as i64) as usize].clone()
        }
    }

    pub fn eval(&self, theta: f64) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.nrows(), self.ncols());
        for (i, c) in self.coeffs.iter().enumerate() {
            out += c * C64::from_polar(1.0, (i as f64 - self.ell as f64) * theta);
        }
        out
    }

    pub fn from_samples(samples: &[DMatrix<C64>], ell: usize) -> Self {
        let (r, c) = samples[0].shape();
        let m = samples.len() as f64;
        let angles = grid_angles(samples.len());
        let coeffs = (0..2 * ell + 1)
            .map(|i| {
                let k = i as f64 - ell as f64;
                let mut acc = DMatrix::zeros(r, c);
                for (s, th) in samples.iter().zip(&angles) {
                    acc += s * C64::from_polar(1.0 / m, -k * th);
                }
                acc
            })
            .collect();
        FourierMatrix { ell, coeffs }
    }

    pub fn to_samples(&self, m: usize) -> Vec<DMatrix<C64>> {
        grid_angles(m).into_iter().map(|th| self.eval(th)).collect()
    }

    /// `result(theta) = self(theta - delta)`
    pub fn shift(&self, delta: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::from_polar(1.0, -(i as f64 - self.ell as f64) * delta))
            .collect();
        FourierMatrix { ell: self.ell, coeffs }
    }

    /// Pointwise complex conjugate of the function.
    pub fn conj_function(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.map(|v| v.conj())).collect();
        FourierMatrix { ell: self.ell, coeffs }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter().map(|v| v.norm()))
            .fold(0.0, f64::max)
    }
}

/// Vector-valued trigonometric polynomial, e.g. a torus embedding.
pub fn eval_vector(coeffs: &[DVector<C64>], theta: f64) -> DVector<C64> {
    let l = (coeffs.len() - 1) as f64 / 2.0;
    let mut out = DVector::zeros(coeffs[0].len());
    for (i, c) in coeffs.iter().enumerate() {
        out += c * C64::from_polar(1.0, (i as f64 - l) * theta);
    }
    out
}
