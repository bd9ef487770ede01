//! Real univariate polynomials in the amplitude `r`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRadialSeries {
    /// `coeffs[p]` multiplies `r^p`.
    pub coeffs: Vec<f64>,
}

impl ScalarRadialSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        ScalarRadialSeries { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        ScalarRadialSeries { coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(p, c)| p as f64 * c)
            .collect::<Vec<_>>();
        ScalarRadialSeries {
            coeffs: if coeffs.is_empty() { vec![0.0] } else { coeffs },
        }
    }

    /// Least-squares fit of degree `degree` through `(r, v)` samples, with
    /// columns scaled by the largest abscissa for conditioning.
    pub fn fit(r: &[f64], v: &[f64], degree: usize) -> Self {
        let n = r.len();
        let deg = degree.min(n.saturating_sub(1));
        let scale = r.iter().fold(0.0_f64, |a, &b| a.max(b.abs())).max(f64::MIN_POSITIVE);
        let a = DMatrix::from_fn(n, deg + 1, |i, p| (r[i] / scale).powi(p as i32));
        let b = DVector::from_column_slice(v);
        let svd = a.svd(true, true);
        let sol = svd.solve(&b, 1e-14).unwrap_or_else(|_| DVector::zeros(deg + 1));
        ScalarRadialSeries {
            coeffs: sol.iter().enumerate().map(|(p, c)| c / scale.powi(p as i32)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivative() {
        let s = ScalarRadialSeries::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.eval(2.0), 17.0);
        assert_eq!(s.derivative().coeffs, vec![2.0, 6.0]);
    }

    #[test]
    fn fit_recovers_polynomial() {
        let r: Vec<f64> = (0..20).map(|i| 1e-3 + 0.01 * i as f64).collect();
        let v: Vec<f64> = r.iter().map(|x| 0.1 + 0.99 * x - 0.2 * x * x * x).collect();
        let s = ScalarRadialSeries::fit(&r, &v, 3);
        for (a, b) in s.coeffs.iter().zip([0.1, 0.99, 0.0, -0.2]) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
