//! Invariant tori of quasi-periodic maps by Fourier collocation and Newton.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::odemap::{stroboscopic_map, StroboscopicMapSpec, VectorFieldModel};
use crate::polyalg::{grid_angles, grid_size, Conjugation, PowerFourierMap, Scalar, Series, C64};

pub const DEFAULT_TOL: f64 = 1e-11;
pub const DEFAULT_MAX_ITER: usize = 25;

/// `K(theta) = sum_k coeffs[k + ell] e^{i k theta}` with `K_{-k} = conj(K_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusEmbedding {
    pub ell: usize,
    pub coeffs: Vec<DVector<C64>>,
}

impl TorusEmbedding {
    pub fn zero(n: usize, ell: usize) -> Self {
        TorusEmbedding {
            ell,
            coeffs: vec![DVector::zeros(n); 2 * ell + 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn harmonic(&self, k: i64) -> DVector<C64> {
        if k.unsigned_abs() as usize > self.ell {
            DVector::zeros(self.dim())
        } else {
            self.coeffs[(k + self.ell as i64) as usize].clone()
        }
    }

    pub fn eval(&self, theta: f64) -> DVector<C64> {
        crate::polyalg::fourier::eval_vector(&self.coeffs, theta)
    }

    pub fn eval_real(&self, theta: f64) -> Vec<f64> {
        self.eval(theta).iter().map(|v| v.re).collect()
    }

    pub fn derivative(&self) -> Self {
        let l = self.ell as f64;
        TorusEmbedding {
            ell: self.ell,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * C64::new(0.0, i as f64 - l))
                .collect(),
        }
    }

    /// `result(theta) = self(theta - delta)`
    pub fn shift(&self, delta: f64) -> Self {
        let l = self.ell as f64;
        TorusEmbedding {
            ell: self.ell,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * C64::from_polar(1.0, -(i as f64 - l) * delta))
                .collect(),
        }
    }

    pub fn resized(&self, ell: usize) -> Self {
        let mut out = TorusEmbedding::zero(self.dim(), ell);
        for k in -(ell as i64)..=ell as i64 {
            out.coeffs[(k + ell as i64) as usize] = self.harmonic(k);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        TorusEmbedding {
            ell: self.ell,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn symmetrize(&mut self) {
        let nh = self.coeffs.len();
        for i in 0..=self.ell {
            let j = nh - 1 - i;
            let avg = (&self.coeffs[i] + self.coeffs[j].map(|v| v.conj())) * C64::new(0.5, 0.0);
            self.coeffs[j] = avg.map(|v| v.conj());
            self.coeffs[i] = avg;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter().map(|v| v.norm()))
            .fold(0.0, f64::max)
    }

    /// The torus as a map with no state dependence, `(x, theta) -> K(theta)`.
    pub fn as_map(&self, n_in: usize, sigma: usize, ell: usize, omega_f: f64) -> PowerFourierMap {
        let n = self.dim();
        let mut g = PowerFourierMap::zeros(n_in, n, sigma, ell, omega_f);
        for i in 0..n {
            let h: Vec<C64> = (0..2 * self.ell + 1).map(|kk| self.coeffs[kk][i]).collect();
            g.comps[i] = Series::from_fourier(n_in, sigma, ell, &h);
        }
        g.conj = Some(Conjugation::real(n_in, n));
        g
    }

    /// Rows `theta, K_1(theta), ..., K_n(theta)` on a uniform grid.
    pub fn sample(&self, points: usize) -> Vec<Vec<f64>> {
        grid_angles(points)
            .into_iter()
            .map(|th| {
                let mut row = vec![th];
                row.extend(self.eval_real(th));
                row
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct TorusSolution {
    pub torus: TorusEmbedding,
    pub residual: f64,
    /// Residual on the doubled grid of `8 ell + 1` angles.
    pub fine_residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// `lambda * mu * nu` of the Newton–Kantorovich bound, estimated from the
    /// first two iterates; below `1/2` the first iterate certifies a root.
    pub kantorovich: Option<f64>,
}

/// Value and Jacobian of `g` at `(x, theta)`.
pub fn eval_with_jacobian(g: &PowerFourierMap, x: &[C64], theta: f64) -> (Vec<C64>, DMatrix<C64>) {
    let t = g.monomials();
    let pw = t.powers(x);
    let mut val = vec![C64::zero(); g.n_out];
    let mut jac = DMatrix::zeros(g.n_out, g.n_in);
    let mut e = vec![0u8; g.n_in];
    for (i, s) in g.comps.iter().enumerate() {
        let jet = s.at_theta(theta);
        for (m, c) in jet.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            val[i] += *c * pw[m];
            let ex = t.exponents(m);
            for j in 0..g.n_in {
                if ex[j] == 0 {
                    continue;
                }
                e.copy_from_slice(ex);
                e[j] -= 1;
                let lower = t.index_of(&e).unwrap();
                jac[(i, j)] += *c * pw[lower] * ex[j] as f64;
            }
        }
    }
    (val, jac)
}

fn torus_residual_on(g: &PowerFourierMap, k: &TorusEmbedding, points: usize) -> f64 {
    let omega = g.omega_f;
    grid_angles(points)
        .into_iter()
        .map(|th| {
            let x: Vec<C64> = k.eval(th).iter().copied().collect();
            let y = g.evaluate(&x, th).unwrap();
            let next = k.eval(th + omega);
            y.iter().zip(next.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Invariance defect `max |F(K(theta), theta) - K(theta + omega)|` on `points` angles.
pub fn torus_residual(g: &PowerFourierMap, k: &TorusEmbedding, points: usize) -> f64 {
    torus_residual_on(g, k, points)
}

struct NewtonStep {
    residual: f64,
    delta_norm: f64,
    matrix: DMatrix<C64>,
    inverse_norm: Option<f64>,
    next: TorusEmbedding,
}

/// Residual of `k` and, unless it is already below `tol`, the Newton update.
fn newton_step(f: &PowerFourierMap, k: &TorusEmbedding, tol: f64, want_inverse: bool) -> Result<NewtonStep> {
    let n = f.n_in;
    let ell = k.ell;
    let nh = 2 * ell + 1;
    let m = grid_size(ell);
    let angles = grid_angles(m);
    let omega = f.omega_f;
    let mut res_samples = Vec::with_capacity(m);
    let mut jac_samples = Vec::with_capacity(m);
    let mut res_max: f64 = 0.0;
    for &th in &angles {
        let x: Vec<C64> = k.eval(th).iter().copied().collect();
        let (y, jac) = eval_with_jacobian(f, &x, th);
        let next = k.eval(th + omega);
        let r = DVector::from_iterator(n, y.iter().zip(next.iter()).map(|(a, b)| a - b));
        res_max = res_max.max(r.iter().map(|v| v.norm()).fold(0.0, f64::max));
        res_samples.push(r);
        jac_samples.push(jac);
    }
    if res_max <= tol {
        return Ok(NewtonStep {
            residual: res_max,
            delta_norm: 0.0,
            matrix: DMatrix::zeros(0, 0),
            inverse_norm: None,
            next: k.clone(),
        });
    }
    // harmonics of the residual (|k| <= ell) and of the Jacobian (|k| <= 2 ell)
    let rhs_h: Vec<DVector<C64>> = (0..nh)
        .map(|i| {
            let kk = i as f64 - ell as f64;
            res_samples.iter().zip(&angles).fold(DVector::zeros(n), |acc, (r, th)| {
                acc + r * C64::from_polar(1.0 / m as f64, -kk * th)
            })
        })
        .collect();
    let a = crate::polyalg::FourierMatrix::from_samples(&jac_samples, 2 * ell);
    let size = n * nh;
    let mut jm = DMatrix::<C64>::zeros(size, size);
    let mut b = DVector::<C64>::zeros(size);
    for kr in 0..nh {
        let kk = kr as i64 - ell as i64;
        for jc in 0..nh {
            let jj = jc as i64 - ell as i64;
            jm.view_mut((kr * n, jc * n), (n, n)).copy_from(&a.harmonic(kk - jj));
        }
        let rot = C64::from_polar(1.0, kk as f64 * omega);
        for d in 0..n {
            jm[(kr * n + d, kr * n + d)] -= rot;
            b[kr * n + d] = -rhs_h[kr][d];
        }
    }
    let lu = jm.clone().lu();
    let delta = lu
        .solve(&b)
        .filter(|d| d.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
        .ok_or_else(|| Error::SingularJacobian("torus Newton matrix is singular".into()))?;
    let inverse_norm = if want_inverse {
        lu.try_inverse().map(|inv| operator_norm_bound(&inv))
    } else {
        None
    };
    let mut next = k.clone();
    for kr in 0..nh {
        for d in 0..n {
            next.coeffs[kr][d] += delta[kr * n + d];
        }
    }
    next.symmetrize();
    Ok(NewtonStep {
        residual: res_max,
        delta_norm: delta.iter().map(|v| v.norm()).fold(0.0, f64::max),
        matrix: jm,
        inverse_norm,
        next,
    })
}

/// Induced max-norm of a matrix (largest absolute row sum).
fn operator_norm_bound(a: &DMatrix<C64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Newton iteration for `K(theta + omega) = F(K(theta), theta)` in Fourier
/// coefficient space.
pub fn solve_torus(
    f: &PowerFourierMap,
    k0: &TorusEmbedding,
    tol: f64,
    max_iter: usize,
) -> Result<TorusSolution> {
    let n = f.n_in;
    if f.n_out != n || k0.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "torus of dimension {} for a map {} -> {}",
            k0.dim(),
            f.n_in,
            f.n_out
        )));
    }
    let mut k = k0.clone();
    let mut history = Vec::new();
    let mut kantorovich = None;
    let mut first: Option<(f64, f64, DMatrix<C64>)> = None;
    for it in 0..=max_iter {
        let step = newton_step(f, &k, tol, first.is_none())?;
        history.push(step.residual);
        if step.residual <= tol {
            let fine_residual = torus_residual_on(f, &k, 8 * k.ell + 1);
            return Ok(TorusSolution {
                torus: k,
                residual: step.residual,
                fine_residual,
                iterations: it,
                residual_history: history,
                kantorovich,
            });
        }
        if it == max_iter {
            break;
        }
        match &first {
            None => {
                first = Some((step.inverse_norm.unwrap_or(f64::INFINITY), step.delta_norm, step.matrix));
            }
            Some((inv_norm, d0, j0)) if kantorovich.is_none() => {
                // Lipschitz constant of the Jacobian from the first two iterates
                let lip = operator_norm_bound(&(&step.matrix - j0)) / d0.max(1e-300);
                kantorovich = Some(inv_norm * d0 * lip);
            }
            _ => {}
        }
        k = step.next;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: *history.last().unwrap(),
    })
}

/// `F(K(theta) + x, theta) - K(theta + omega)`, with the constant part
/// verified against `tol` and then removed.
pub fn center_map(f: &PowerFourierMap, k: &TorusEmbedding, tol: f64) -> Result<PowerFourierMap> {
    let n = f.n_in;
    let ell = f.ell.max(k.ell);
    let h = PowerFourierMap::identity(n, f.sigma, ell, f.omega_f).add(&k.as_map(n, f.sigma, ell, f.omega_f));
    let shifted = f.resized(f.sigma, ell).compose(&h)?;
    subtract_image(shifted, k, tol)
}

/// Remove `K(theta + omega)` from a map already expanded about `K`.
pub fn subtract_image(mut g: PowerFourierMap, k: &TorusEmbedding, tol: f64) -> Result<PowerFourierMap> {
    let next = k.shift(-g.omega_f).resized(g.ell);
    for i in 0..g.n_out {
        for kk in -(g.ell as i64)..=g.ell as i64 {
            let v = g.get(i, 0, kk) - next.harmonic(kk)[i];
            g.set(i, 0, kk, v);
        }
    }
    let defect = grid_angles(grid_size(g.ell))
        .into_iter()
        .map(|th| {
            g.comps
                .iter()
                .map(|s| crate::polyalg::fourier::eval_harmonics(s.fourier(0), th).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    if defect > 10.0 * tol {
        return Err(Error::ResidualTooLarge {
            residual: defect,
            limit: 10.0 * tol,
        });
    }
    for s in g.comps.iter_mut() {
        s.fourier_mut(0).iter_mut().for_each(|v| *v = C64::zero());
    }
    g.conj = Some(Conjugation::real(g.n_in, g.n_out));
    Ok(g)
}

/// Torus of the stroboscopic map of an ODE: repeated linear expansions of
/// the flow about the current guess, each followed by one exact solve of the
/// linearised torus equation. Falls back to continuation in the forcing
/// amplitude when the direct iteration fails.
pub fn solve_flow_torus(
    model: &VectorFieldModel,
    spec: &StroboscopicMapSpec,
    tol: f64,
    max_iter: usize,
) -> Result<TorusSolution> {
    match flow_torus_from(model, spec, &TorusEmbedding::zero(model.dim(), spec.ell), tol, max_iter) {
        Ok(s) => Ok(s),
        Err(_) if model.is_forced() => {
            let mut k = TorusEmbedding::zero(model.dim(), spec.ell);
            let mut last = None;
            for step in 1..=4 {
                let mut m = model.clone();
                m.amplitude = model.amplitude * step as f64 / 4.0;
                let s = flow_torus_from(&m, spec, &k, tol, max_iter)?;
                k = s.torus.clone();
                last = Some(s);
            }
            Ok(last.unwrap())
        }
        Err(e) => Err(e),
    }
}

fn flow_torus_from(
    model: &VectorFieldModel,
    spec: &StroboscopicMapSpec,
    k0: &TorusEmbedding,
    tol: f64,
    max_iter: usize,
) -> Result<TorusSolution> {
    let lin = StroboscopicMapSpec { sigma: 1, ..*spec };
    let mut k = k0.clone();
    let mut history = Vec::new();
    for it in 0..=max_iter {
        let fk = stroboscopic_map(model, &lin, Some(&k))?;
        // map of the displacement from K: y = F(K + x) - K(theta + omega)
        let next = k.shift(-fk.omega_f);
        let mut g = fk.clone();
        for i in 0..g.n_out {
            for kk in -(g.ell as i64)..=g.ell as i64 {
                let v = g.get(i, 0, kk) - next.harmonic(kk)[i];
                g.set(i, 0, kk, v);
            }
        }
        let res = torus_residual_on(&g, &TorusEmbedding::zero(k.dim(), k.ell), grid_size(k.ell));
        history.push(res);
        if res <= tol {
            let fine_residual = torus_residual_on(&g, &TorusEmbedding::zero(k.dim(), k.ell), 8 * k.ell + 1);
            return Ok(TorusSolution {
                torus: k,
                residual: res,
                fine_residual,
                iterations: it,
                residual_history: history,
                kantorovich: None,
            });
        }
        if it == max_iter {
            break;
        }
        let step = newton_step(&g, &TorusEmbedding::zero(k.dim(), k.ell), 0.0, false)?;
        k = k.add(&step.next);
        k.symmetrize();
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: *history.last().unwrap(),
    })
}
