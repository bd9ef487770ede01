//! Invariant manifolds about a torus: reconstructed from two complementary
//! foliations, or solved directly from the map or the vector field.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bundles::{left_multiply, linear_map, DichotomyDecomposition, ResonanceHit};
use crate::error::{Error, Result};
use crate::foliation::{classify, diagonal_of, lambda_power, reduced_partner, Choice, FoliationModel, SolveOptions};
use crate::odemap::{vector_field_about, VectorFieldModel};
use crate::polyalg::{
    compose_jets, grid_angles, grid_size, Conjugation, GridPowers, Jet, Monomials, PowerFourierMap, C64,
};
use crate::torus::TorusEmbedding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Foil,
    Map,
    Ode,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Foil => "foil",
            Method::Map => "map",
            Method::Ode => "ode",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ManifoldModel {
    /// Immersion `nu -> n` in frame coordinates.
    pub w: PowerFourierMap,
    /// Reduced dynamics: a map, or a vector field when `continuous`.
    pub r: PowerFourierMap,
    pub coords: Vec<usize>,
    pub method: Method,
    pub continuous: bool,
    pub resonant_terms: Vec<ResonanceHit>,
}

impl ManifoldModel {
    /// Advance reduced coordinates by one sampling period. Continuous
    /// dynamics are integrated with RK4 over `dt` in `steps` substeps.
    pub fn reduced_step(&self, z: &[C64], theta: f64, dt: f64, steps: usize) -> Result<Vec<C64>> {
        if !self.continuous {
            return self.r.evaluate(z, theta);
        }
        let h = dt / steps as f64;
        let wf = self.r.omega_f;
        let f = |y: &[C64], t: f64| self.r.evaluate(y, theta + wf * t);
        let mut y = z.to_vec();
        let axpy = |a: &[C64], b: &[C64], s: f64| -> Vec<C64> { a.iter().zip(b).map(|(x, v)| x + v * s).collect() };
        for s in 0..steps {
            let t = s as f64 * h;
            let k1 = f(&y, t)?;
            let k2 = f(&axpy(&y, &k1, h / 2.0), t + h / 2.0)?;
            let k3 = f(&axpy(&y, &k2, h / 2.0), t + h / 2.0)?;
            let k4 = f(&axpy(&y, &k3, h), t + h)?;
            for i in 0..y.len() {
                y[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
            }
        }
        Ok(y)
    }

    /// The immersion in the coordinates of the frame `W^d`.
    pub fn physical(&self, dec: &DichotomyDecomposition) -> PowerFourierMap {
        let mut w = left_multiply(&dec.w, &self.w.resized(self.w.sigma, self.w.ell.max(dec.ell)));
        if let Some(c) = &self.w.conj {
            w.conj = Some(Conjugation { inputs: c.inputs.clone(), outputs: (0..w.n_out).collect() });
            w.symmetrize();
        }
        w
    }
}

fn inclusion(n: usize, coords: &[usize], sigma: usize, ell: usize, omega_f: f64) -> PowerFourierMap {
    let mut w = PowerFourierMap::zeros(coords.len(), n, sigma, ell, omega_f);
    for (p, &c) in coords.iter().enumerate() {
        w.set(c, 1 + p, 0, C64::new(1.0, 0.0));
    }
    w
}

fn immersion_conjugation(f: &PowerFourierMap, coords: &[usize]) -> Result<Option<(Conjugation, Conjugation)>> {
    Ok(reduced_partner(f, coords)?.map(|pr| {
        let full = f.conj.as_ref().unwrap().inputs.clone();
        (
            Conjugation { inputs: pr.clone(), outputs: full },
            Conjugation { inputs: pr.clone(), outputs: pr },
        )
    }))
}

/// Immersion of the leaf `V = 0` parametrised by `z = U`, by degree-graded
/// fixed-point iteration at every angle of the grid.
pub fn reconstruct(ufol: &FoliationModel, vfol: &FoliationModel) -> Result<ManifoldModel> {
    let n = ufol.u.n_in;
    if vfol.u.n_in != n || ufol.nu + vfol.nu != n {
        return Err(Error::DimensionMismatch(format!(
            "foliations of dimensions {} and {} do not split {n}",
            ufol.nu, vfol.nu
        )));
    }
    if ufol.coords.iter().any(|c| vfol.coords.contains(c)) {
        return Err(Error::DimensionMismatch("index sets overlap".into()));
    }
    let nu = ufol.nu;
    let sigma = ufol.u.sigma.min(vfol.u.sigma);
    let ell = ufol.u.ell.max(vfol.u.ell);
    let angles = grid_angles(grid_size(ell));
    let mut encoders = Vec::with_capacity(angles.len());
    let mut inverses = Vec::with_capacity(angles.len());
    for &th in &angles {
        let enc: Vec<Jet<C64>> = ufol.u.at_theta(th).into_iter().chain(vfol.u.at_theta(th)).collect();
        let lin = DMatrix::from_fn(n, n, |i, j| enc[i].coeffs()[1 + j]);
        let sv = lin.clone().singular_values();
        if !(sv.min() > 1e-12 * sv.max()) {
            return Err(Error::SingularFrame(format!("stacked encoders are singular at theta = {th:.4}")));
        }
        inverses.push((lin.clone().try_inverse().unwrap(), lin));
        encoders.push(enc);
    }
    // target z for the first nu rows, zero for the rest
    let target: Vec<Jet<C64>> = (0..n)
        .map(|i| if i < nu { Jet::variable(nu, sigma, i, C64::new(0.0, 0.0)) } else { Jet::zeros(nu, sigma) })
        .collect();
    let apply = |m: &DMatrix<C64>, rhs: &[Jet<C64>]| -> Vec<Jet<C64>> {
        (0..n)
            .map(|i| {
                let mut acc = Jet::zeros(nu, sigma);
                for (j, r) in rhs.iter().enumerate() {
                    acc.axpy(m[(i, j)], r);
                }
                acc
            })
            .collect()
    };
    let mut samples: Vec<Vec<Jet<C64>>> = inverses.iter().map(|(inv, _)| apply(inv, &target)).collect();
    // Each sweep fixes one more degree; projecting onto the represented
    // harmonics after every sweep makes the fixed point satisfy the
    // collocated constraints exactly.
    for _ in 2..=sigma {
        let projected = PowerFourierMap::from_grid_samples(&samples, ell, ufol.u.omega_f);
        for (q, &th) in angles.iter().enumerate() {
            let w = projected.at_theta(th);
            let (inv, lin) = &inverses[q];
            let full = compose_jets(&encoders[q], &w, sigma);
            let lw = apply(lin, &w);
            let rhs: Vec<Jet<C64>> = (0..n).map(|i| target[i].sub(&full[i].sub(&lw[i]))).collect();
            samples[q] = apply(inv, &rhs);
        }
    }
    let mut wmap = PowerFourierMap::from_grid_samples(&samples, ell, ufol.u.omega_f);
    if let (Some(pr), Some(cu)) = (&ufol.r.conj, &ufol.u.conj) {
        wmap.conj = Some(Conjugation { inputs: pr.inputs.clone(), outputs: cu.inputs.clone() });
        wmap.symmetrize();
    }
    Ok(ManifoldModel {
        w: wmap,
        r: ufol.r.clone(),
        coords: ufol.coords.clone(),
        method: Method::Foil,
        continuous: false,
        resonant_terms: ufol.resonant_terms.clone(),
    })
}

/// `W(R(z, theta), theta + omega) = Fd(W(z, theta), theta)` solved order by
/// order, with `W` tangent to the frame coordinates `coords`.
pub fn solve_manifold_map(
    fd: &PowerFourierMap,
    omega: f64,
    coords: &[usize],
    opts: &SolveOptions,
) -> Result<ManifoldModel> {
    let lambda = diagonal_of(fd)?;
    let n = fd.n_in;
    let nu = coords.len();
    let (sigma, ell) = (fd.sigma, fd.ell);
    let mut w = inclusion(n, coords, sigma, ell, fd.omega_f);
    let mut r = PowerFourierMap::zeros(nu, nu, sigma, ell, fd.omega_f);
    for (p, &c) in coords.iter().enumerate() {
        r.set(p, 1 + p, 0, lambda[c]);
    }
    if let Some((cw, cr)) = immersion_conjugation(fd, coords)? {
        w.conj = Some(cw);
        r.conj = Some(cr);
    }
    let lam_i: Vec<C64> = coords.iter().map(|&c| lambda[c]).collect();
    let t = Monomials::get(nu, sigma);
    let mut ledger = Vec::new();
    for j in 2..=sigma {
        let lhs = fd.compose_collocated(&w, j)?;
        let rhs = w.compose_on_grid(&GridPowers::new(&r, sigma, j, ell), omega);
        for i in 0..n {
            let inside = coords.iter().position(|&c| c == i);
            for m in t.degree_range(j) {
                let exps = t.exponents(m);
                let lm = lambda_power(&lam_i, exps);
                for k in -(ell as i64)..=ell as i64 {
                    let g = lhs.get(i, m, k) - rhs.get(i, m, k);
                    if g == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let den = lm * C64::from_polar(1.0, k as f64 * omega) - lambda[i];
                    let choice = classify(inside.is_some(), den.norm(), k, j, opts, || {
                        format!("manifold coordinate {i}, monomial {exps:?}, harmonic {k}")
                    })?;
                    match choice {
                        Choice::Conjugate => {
                            r.set(inside.unwrap(), m, k, g);
                            ledger.push(ResonanceHit {
                                target: i,
                                exponents: full_exponents(exps, coords, n),
                                harmonic: k,
                                denominator: den.norm(),
                                internal: true,
                            });
                        }
                        Choice::Solve => w.set(i, m, k, g / den),
                    }
                }
            }
        }
    }
    w.symmetrize();
    r.symmetrize();
    Ok(ManifoldModel {
        w,
        r,
        coords: coords.to_vec(),
        method: Method::Map,
        continuous: false,
        resonant_terms: ledger,
    })
}

fn full_exponents(reduced: &[u8], coords: &[usize], n: usize) -> Vec<u8> {
    let mut e = vec![0u8; n];
    for (p, &c) in coords.iter().enumerate() {
        e[c] = reduced[p];
    }
    e
}

/// Largest coefficient of `Fd(W) - W(R, theta + omega)` through order sigma.
pub fn map_invariance_defect(m: &ManifoldModel, fd: &PowerFourierMap, omega: f64) -> Result<f64> {
    let lhs = fd.compose_collocated(&m.w, fd.sigma)?;
    let rhs = m.w.compose_on_grid(&GridPowers::new(&m.r, m.w.sigma, m.w.sigma, m.w.ell), omega);
    Ok(lhs.sub(&rhs).max_abs())
}

/// `D_z W R` by collocation, through degree `max_degree`.
fn tangent_flow(w: &PowerFourierMap, r: &PowerFourierMap, max_degree: usize) -> PowerFourierMap {
    let ell = w.ell.max(r.ell);
    let nu = w.n_in;
    let dw: Vec<PowerFourierMap> = (0..nu)
        .map(|p| PowerFourierMap {
            comps: w.comps.iter().map(|c| c.derivative(p)).collect(),
            ..PowerFourierMap::zeros(nu, w.n_out, w.sigma, w.ell, w.omega_f)
        })
        .collect();
    let samples: Vec<Vec<Jet<C64>>> = grid_angles(grid_size(ell))
        .into_iter()
        .map(|th| {
            let rq = r.at_theta(th);
            let mut acc: Vec<Jet<C64>> = (0..w.n_out).map(|_| Jet::zeros(nu, w.sigma)).collect();
            for (p, d) in dw.iter().enumerate() {
                for (a, dj) in acc.iter_mut().zip(d.at_theta(th)) {
                    a.add_assign(&dj.mul_trunc(&rq[p], max_degree));
                }
            }
            acc
        })
        .collect();
    PowerFourierMap::from_grid_samples(&samples, ell, w.omega_f)
}

fn theta_derivative(w: &PowerFourierMap) -> PowerFourierMap {
    PowerFourierMap {
        comps: w.comps.iter().map(|c| c.theta_derivative()).collect(),
        conj: None,
        ..PowerFourierMap::zeros(w.n_in, w.n_out, w.sigma, w.ell, w.omega_f)
    }
}

/// Vector field about the torus in the map's bundle frame,
/// `U^d (f(W^d y) - omega_f dW^d/dtheta y)`, with the linear part replaced by
/// `diag(log(lambda) / dt)`. Returns the field and the replaced deviation.
pub fn diagonalize_vector_field(
    fc: &PowerFourierMap,
    dec: &DichotomyDecomposition,
    dt: f64,
) -> Result<(PowerFourierMap, f64)> {
    let n = fc.n_in;
    if dec.dim() != n {
        return Err(Error::DimensionMismatch(format!("frame of dimension {} for a field on {n}", dec.dim())));
    }
    let ell = fc.ell.max(dec.ell);
    let h = linear_map(&dec.w, fc.sigma, ell, fc.omega_f);
    let g = fc.resized(fc.sigma, ell).compose_collocated(&h, fc.sigma)?;
    let dh = theta_derivative(&h);
    let mut inner = g.clone();
    for (a, b) in inner.comps.iter_mut().zip(&dh.comps) {
        a.axpy(C64::new(-fc.omega_f, 0.0), b);
    }
    let mut fd = left_multiply(&dec.u, &inner);
    fd.omega_f = fc.omega_f;
    let mu: Vec<C64> = dec.lambda.iter().map(|l| l.ln() / dt).collect();
    let mut defect: f64 = 0.0;
    if fc.sigma >= 1 {
        for i in 0..n {
            for j in 0..n {
                for k in -(ell as i64)..=ell as i64 {
                    let exact = if i == j && k == 0 { mu[i] } else { C64::new(0.0, 0.0) };
                    defect = defect.max((fd.get(i, 1 + j, k) - exact).norm());
                    fd.set(i, 1 + j, k, exact);
                }
            }
        }
    }
    fd.conj = Some(dec.conjugation());
    fd.symmetrize();
    Ok((fd, defect))
}

/// `D_z W R + omega_f D_theta W = f(W)` for a vector field whose linear part
/// is the constant diagonal `diag(mu)`. Denominators are
/// `m . mu + i k omega_f - mu_i`.
pub fn solve_manifold_vector_field(
    fd: &PowerFourierMap,
    coords: &[usize],
    opts: &SolveOptions,
) -> Result<ManifoldModel> {
    let mu = diagonal_of(fd)?;
    let n = fd.n_in;
    let nu = coords.len();
    let (sigma, ell, wf) = (fd.sigma, fd.ell, fd.omega_f);
    let mut w = inclusion(n, coords, sigma, ell, wf);
    let mut r = PowerFourierMap::zeros(nu, nu, sigma, ell, wf);
    for (p, &c) in coords.iter().enumerate() {
        r.set(p, 1 + p, 0, mu[c]);
    }
    if let Some((cw, cr)) = immersion_conjugation(fd, coords)? {
        w.conj = Some(cw);
        r.conj = Some(cr);
    }
    let t = Monomials::get(nu, sigma);
    let mut ledger = Vec::new();
    for j in 2..=sigma {
        let lhs = fd.compose_collocated(&w, j)?;
        let rhs = tangent_flow(&w, &r, j);
        let dth = theta_derivative(&w);
        for i in 0..n {
            let inside = coords.iter().position(|&c| c == i);
            for m in t.degree_range(j) {
                let exps = t.exponents(m);
                let mdot: C64 = exps.iter().zip(coords).map(|(&e, &c)| mu[c] * e as f64).sum();
                for k in -(ell as i64)..=ell as i64 {
                    let g = lhs.get(i, m, k) - rhs.get(i, m, k) - dth.get(i, m, k) * wf;
                    if g == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let den = mdot + C64::new(0.0, k as f64 * wf) - mu[i];
                    let choice = classify(inside.is_some(), den.norm(), k, j, opts, || {
                        format!("manifold coordinate {i}, monomial {exps:?}, harmonic {k}")
                    })?;
                    match choice {
                        Choice::Conjugate => {
                            r.set(inside.unwrap(), m, k, g);
                            ledger.push(ResonanceHit {
                                target: i,
                                exponents: full_exponents(exps, coords, n),
                                harmonic: k,
                                denominator: den.norm(),
                                internal: true,
                            });
                        }
                        Choice::Solve => w.set(i, m, k, g / den),
                    }
                }
            }
        }
    }
    w.symmetrize();
    r.symmetrize();
    Ok(ManifoldModel {
        w,
        r,
        coords: coords.to_vec(),
        method: Method::Ode,
        continuous: true,
        resonant_terms: ledger,
    })
}

/// Largest coefficient of `D_z W R + omega_f D_theta W - f(W)` through order sigma.
pub fn vector_field_invariance_defect(m: &ManifoldModel, fd: &PowerFourierMap) -> Result<f64> {
    let lhs = fd.compose_collocated(&m.w, fd.sigma)?;
    let mut rhs = tangent_flow(&m.w, &m.r, fd.sigma);
    for (a, b) in rhs.comps.iter_mut().zip(&theta_derivative(&m.w).comps) {
        a.axpy(C64::new(fd.omega_f, 0.0), b);
    }
    Ok(lhs.sub(&rhs).max_abs())
}

/// Manifold of the flow about a torus, in the bundle frame of the
/// time-`dt` map. The resonance thresholds of `opts` refer to map
/// denominators and are divided by `dt`.
pub fn solve_manifold_ode(
    model: &VectorFieldModel,
    torus: Option<&TorusEmbedding>,
    dec: &DichotomyDecomposition,
    coords: &[usize],
    sigma: usize,
    dt: f64,
    opts: &SolveOptions,
) -> Result<(ManifoldModel, f64)> {
    let ell = torus.map_or(dec.ell, |k| k.ell.max(dec.ell));
    let fc = vector_field_about(model, torus, sigma, ell)?;
    let (fd, defect) = diagonalize_vector_field(&fc, dec, dt)?;
    let copts = SolveOptions {
        delta_int: opts.delta_int / dt,
        delta_ext: opts.delta_ext / dt,
        ..opts.clone()
    };
    Ok((solve_manifold_vector_field(&fd, coords, &copts)?, defect))
}

/// Series of the reduced coordinates recovered from the immersion by an encoder.
pub fn encoder_on_manifold(fol: &FoliationModel, m: &ManifoldModel) -> Result<PowerFourierMap> {
    fol.u.compose_collocated(&m.w, m.w.sigma)
}

/// Largest deviation of `U(W(z, theta), theta)` from `z`, coefficientwise.
pub fn compatibility_defect(fol: &FoliationModel, m: &ManifoldModel) -> Result<f64> {
    let uw = encoder_on_manifold(fol, m)?;
    let mut id = PowerFourierMap::zeros(m.w.n_in, m.w.n_in, uw.sigma, uw.ell, uw.omega_f);
    for p in 0..m.w.n_in {
        id.set(p, 1 + p, 0, C64::new(1.0, 0.0));
    }
    Ok(uw.sub(&id).max_abs())
}

/// Residual of both reconstruction constraints, `U(W) = z` and `V(W) = 0`.
pub fn reconstruction_defect(ufol: &FoliationModel, vfol: &FoliationModel, m: &ManifoldModel) -> Result<f64> {
    let vw = encoder_on_manifold(vfol, m)?;
    Ok(compatibility_defect(ufol, m)?.max(vw.max_abs()))
}

/// Largest difference between two immersions, coefficientwise.
pub fn immersion_distance(a: &ManifoldModel, b: &ManifoldModel) -> f64 {
    let ell = a.w.ell.max(b.w.ell);
    let sigma = a.w.sigma.min(b.w.sigma);
    a.w.resized(sigma, ell).sub(&b.w.resized(sigma, ell)).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foliation::{complementary_foliation, solve_foliation};

    fn cubic_pair(lam: C64, mu: f64, sigma: usize) -> PowerFourierMap {
        // conjugate pair (0, 1) and a real coordinate 2, coupled nonlinearly
        let mut f = PowerFourierMap::zeros(3, 3, sigma, 0, 0.4);
        let t = f.monomials();
        f.set(0, 1, 0, lam);
        f.set(1, 2, 0, lam.conj());
        f.set(2, 3, 0, C64::new(mu, 0.0));
        let c = C64::new(-0.1, 0.03);
        let terms = [
            (0, [2, 1, 0], c),
            (1, [1, 2, 0], c.conj()),
            (0, [1, 0, 1], C64::new(0.2, 0.1)),
            (1, [0, 1, 1], C64::new(0.2, -0.1)),
            (2, [1, 1, 0], C64::new(0.5, 0.0)),
            (2, [2, 0, 0], C64::new(0.1, 0.2)),
            (2, [0, 2, 0], C64::new(0.1, -0.2)),
        ];
        for (i, e, v) in terms {
            if let Some(m) = t.index_of(&e) {
                f.set(i, m, 0, v);
            }
        }
        f.with_conjugation(Conjugation { inputs: vec![1, 0, 2], outputs: vec![1, 0, 2] })
    }

    #[test]
    fn linear_encoders_give_inclusion() {
        let f = cubic_pair(C64::from_polar(0.9, 0.5), 0.3, 1);
        let u = solve_foliation(&f, 0.4, &[0, 1], &SolveOptions::default()).unwrap();
        let v = complementary_foliation(&f, 0.4, &[0, 1], &SolveOptions::default()).unwrap();
        let m = reconstruct(&u, &v).unwrap();
        let inc = inclusion(3, &[0, 1], 1, 0, 0.4);
        assert!(m.w.sub(&inc).max_abs() < 1e-15);
    }

    #[test]
    fn graph_over_first_coordinate() {
        // U(x) = x1 + x2^2, V(x) = x2  =>  W(z) = (z, 0)
        let mut u = PowerFourierMap::zeros(2, 1, 3, 0, 0.0);
        u.set(0, 1, 0, C64::new(1.0, 0.0));
        u.set(0, Monomials::get(2, 3).index_of(&[0, 2]).unwrap(), 0, C64::new(1.0, 0.0));
        let mut v = PowerFourierMap::zeros(2, 1, 3, 0, 0.0);
        v.set(0, 2, 0, C64::new(1.0, 0.0));
        let fol = |u: PowerFourierMap, c: usize| FoliationModel {
            r: PowerFourierMap::zeros(1, 1, 3, 0, 0.0),
            u,
            coords: vec![c],
            nu: 1,
            resonant_terms: vec![],
            autonomous: true,
        };
        let m = reconstruct(&fol(u, 0), &fol(v, 1)).unwrap();
        let mut expect = PowerFourierMap::zeros(1, 2, 3, 0, 0.0);
        expect.set(0, 1, 0, C64::new(1.0, 0.0));
        assert!(m.w.sub(&expect).max_abs() < 1e-15);
    }

    #[test]
    fn singular_stack_is_rejected() {
        let mut u = PowerFourierMap::zeros(2, 1, 2, 0, 0.0);
        u.set(0, 1, 0, C64::new(1.0, 0.0));
        let fol = |u: PowerFourierMap, c: usize| FoliationModel {
            r: PowerFourierMap::zeros(1, 1, 2, 0, 0.0),
            u,
            coords: vec![c],
            nu: 1,
            resonant_terms: vec![],
            autonomous: true,
        };
        let e = reconstruct(&fol(u.clone(), 0), &fol(u, 1)).unwrap_err();
        assert!(matches!(e, Error::SingularFrame(_)));
    }

    #[test]
    fn reconstruction_matches_direct_solve() {
        let f = cubic_pair(C64::from_polar(0.9, 0.5), 0.3, 5);
        let opts = SolveOptions::default();
        let u = solve_foliation(&f, 0.4, &[0, 1], &opts).unwrap();
        let v = complementary_foliation(&f, 0.4, &[0, 1], &opts).unwrap();
        let foil = reconstruct(&u, &v).unwrap();
        assert!(reconstruction_defect(&u, &v, &foil).unwrap() < 1e-12);
        // reconstructed immersion is invariant with the encoder's R
        assert!(map_invariance_defect(&foil, &f, 0.4).unwrap() < 1e-12);
        let direct = solve_manifold_map(&f, 0.4, &[0, 1], &opts).unwrap();
        assert!(map_invariance_defect(&direct, &f, 0.4).unwrap() < 1e-12);
        // no internal resonance below delta_int here, so both R are linear and
        // the immersions coincide
        assert!(u.resonant_terms.is_empty() && direct.resonant_terms.is_empty());
        assert!(immersion_distance(&foil, &direct) < 1e-12);
    }

    #[test]
    fn linear_map_manifold_is_inclusion() {
        let f = cubic_pair(C64::from_polar(0.9, 0.5), 0.3, 1);
        let m = solve_manifold_map(&f, 0.4, &[2], &SolveOptions::default()).unwrap();
        assert!(m.w.sub(&inclusion(3, &[2], 1, 0, 0.4)).max_abs() == 0.0);
        assert_eq!(m.r.get(0, 1, 0), C64::new(0.3, 0.0));
    }

    #[test]
    fn vector_field_manifold_is_invariant() {
        let mut f = PowerFourierMap::zeros(3, 3, 4, 1, 1.3);
        let t = f.monomials();
        let mu = [C64::new(-0.05, 1.0), C64::new(-0.05, -1.0), C64::new(-0.7, 0.0)];
        for (i, m) in mu.iter().enumerate() {
            f.set(i, 1 + i, 0, *m);
        }
        for k in [-1i64, 1] {
            f.set(2, t.index_of(&[1, 1, 0]).unwrap(), k, C64::new(0.3, 0.0));
            f.set(0, t.index_of(&[1, 0, 1]).unwrap(), k, C64::new(0.1, 0.05 * k as f64));
            f.set(1, t.index_of(&[0, 1, 1]).unwrap(), -k, C64::new(0.1, -0.05 * k as f64));
        }
        f.set(0, t.index_of(&[2, 1, 0]).unwrap(), 0, C64::new(0.2, -0.4));
        f.set(1, t.index_of(&[1, 2, 0]).unwrap(), 0, C64::new(0.2, 0.4));
        let f = f.with_conjugation(Conjugation { inputs: vec![1, 0, 2], outputs: vec![1, 0, 2] });
        let opts = SolveOptions { delta_int: 0.5, ..SolveOptions::default() };
        let m = solve_manifold_vector_field(&f, &[0, 1], &opts).unwrap();
        assert!(vector_field_invariance_defect(&m, &f).unwrap() < 1e-12);
        // the cubic backbone term (denominator |mu_0 + mu_1| = 0.1) stays in R
        let hit = m.resonant_terms.iter().find(|h| h.target == 0 && h.exponents == vec![2, 1, 0]).unwrap();
        assert_eq!(hit.harmonic, 0);
        assert!((hit.denominator - 0.1).abs() < 1e-12);
        let rt = Monomials::get(2, 4);
        assert!(m.r.get(0, rt.index_of(&[2, 1]).unwrap(), 0).norm() > 0.1);
        assert!(m.r.reality_defect() < 1e-15);
        let plain = solve_manifold_vector_field(&f, &[0, 1], &SolveOptions::default()).unwrap();
        assert!(plain.resonant_terms.is_empty());
        assert!(vector_field_invariance_defect(&plain, &f).unwrap() < 1e-12);
    }
}
