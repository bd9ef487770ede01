//! Invariant foliations about a torus, solved order by order in the
//! diagonal frame.
//!
//! The map is `Fd(x, theta) = Lambda x + N(x, theta)` and the unknowns are an
//! encoder `U` and conjugate dynamics `R` with
//! `R(U(x, theta), theta) = U(Fd(x, theta), theta + omega)`.

use serde::{Deserialize, Serialize};

use crate::bundles::ResonanceHit;
use crate::error::{Error, Result};
use crate::polyalg::{Conjugation, GridPowers, Monomials, PowerFourierMap, C64};

pub const DEFAULT_DELTA_INT: f64 = 0.1;
pub const DEFAULT_DELTA_EXT: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Keep the conjugate dynamics free of the angle.
    pub autonomous: bool,
    pub delta_int: f64,
    pub delta_ext: f64,
    /// Highest order allowed in the conjugate dynamics; `1` keeps it linear.
    pub r_order: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            autonomous: true,
            delta_int: DEFAULT_DELTA_INT,
            delta_ext: DEFAULT_DELTA_EXT,
            r_order: usize::MAX,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FoliationModel {
    /// Encoder, `n -> nu`.
    pub u: PowerFourierMap,
    /// Conjugate dynamics, `nu -> nu`.
    pub r: PowerFourierMap,
    /// Frame coordinates selected by the index set, in order.
    pub coords: Vec<usize>,
    pub nu: usize,
    /// Terms moved into `R`, indexed by frame coordinates.
    pub resonant_terms: Vec<ResonanceHit>,
    pub autonomous: bool,
}

/// Diagonal of a map whose linear part is the constant matrix `Lambda`.
pub fn diagonal_of(fd: &PowerFourierMap) -> Result<Vec<C64>> {
    if fd.sigma < 1 || fd.n_in != fd.n_out {
        return Err(Error::DimensionMismatch("expected a square map of order at least one".into()));
    }
    let lin = fd.linear_part();
    let scale = lin.iter().flat_map(|a| a.iter().map(|v| v.norm())).fold(0.0, f64::max).max(1.0);
    let ell = fd.ell as i64;
    for (kk, a) in lin.iter().enumerate() {
        for i in 0..fd.n_out {
            for j in 0..fd.n_in {
                if (kk as i64 - ell != 0 || i != j) && a[(i, j)].norm() > 1e-12 * scale {
                    return Err(Error::DefectiveFrame(format!(
                        "linear part is not diagonal and constant (entry ({i}, {j}) of harmonic {})",
                        kk as i64 - ell
                    )));
                }
            }
        }
    }
    let a0 = &lin[fd.ell];
    Ok((0..fd.n_in).map(|i| a0[(i, i)]).collect())
}

/// Conjugation partners inside a coordinate subset, renumbered.
pub(crate) fn reduced_partner(fd: &PowerFourierMap, coords: &[usize]) -> Result<Option<Vec<usize>>> {
    let Some(cj) = &fd.conj else { return Ok(None) };
    coords
        .iter()
        .map(|c| {
            coords.iter().position(|&d| d == cj.inputs[*c]).ok_or_else(|| {
                Error::DimensionMismatch(format!("coordinate {c} is selected without its conjugate"))
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Exponents restricted to `coords` when every active variable lies in it.
pub(crate) fn restrict(exps: &[u8], coords: &[usize]) -> Option<Vec<u8>> {
    if exps.iter().enumerate().any(|(v, &e)| e > 0 && !coords.contains(&v)) {
        return None;
    }
    Some(coords.iter().map(|&c| exps[c]).collect())
}

pub(crate) fn lambda_power(lambda: &[C64], exps: &[u8]) -> C64 {
    exps.iter()
        .zip(lambda)
        .fold(C64::new(1.0, 0.0), |acc, (&e, l)| acc * l.powi(e as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Choice {
    /// Keep the term in the conjugate dynamics.
    Conjugate,
    /// Divide by the denominator.
    Solve,
}

/// Resonance rule shared by the foliation and manifold solvers.
pub(crate) fn classify(
    internal: bool,
    denominator: f64,
    harmonic: i64,
    order: usize,
    opts: &SolveOptions,
    describe: impl Fn() -> String,
) -> Result<Choice> {
    let allowed = harmonic == 0 || !opts.autonomous;
    if internal && denominator < opts.delta_int && allowed && order <= opts.r_order {
        return Ok(Choice::Conjugate);
    }
    if denominator < opts.delta_ext {
        let msg = format!("{} has denominator {denominator:.3e}", describe());
        return Err(if internal && !allowed {
            Error::ParametricResonance(msg)
        } else {
            Error::ExternalResonance(msg)
        });
    }
    Ok(Choice::Solve)
}

/// Encoder and conjugate dynamics for the frame coordinates `coords`.
/// `omega` is the rotation of the torus.
pub fn solve_foliation(
    fd: &PowerFourierMap,
    omega: f64,
    coords: &[usize],
    opts: &SolveOptions,
) -> Result<FoliationModel> {
    let lambda = diagonal_of(fd)?;
    let n = fd.n_in;
    let nu = coords.len();
    if nu == 0 || coords.iter().any(|&c| c >= n) {
        return Err(Error::DimensionMismatch(format!("invalid coordinate set {coords:?} for dimension {n}")));
    }
    let (sigma, ell) = (fd.sigma, fd.ell);
    let partner = reduced_partner(fd, coords)?;

    let mut u = PowerFourierMap::zeros(n, nu, sigma, ell, fd.omega_f);
    let mut r = PowerFourierMap::zeros(nu, nu, sigma, ell, fd.omega_f);
    for (p, &c) in coords.iter().enumerate() {
        u.set(p, 1 + c, 0, C64::new(1.0, 0.0));
        r.set(p, 1 + p, 0, lambda[c]);
    }
    if let (Some(pr), Some(cj)) = (&partner, &fd.conj) {
        u.conj = Some(Conjugation { inputs: cj.inputs.clone(), outputs: pr.clone() });
        r.conj = Some(Conjugation { inputs: pr.clone(), outputs: pr.clone() });
    }

    let t = Monomials::get(n, sigma);
    let tr = Monomials::get(nu, sigma);
    let pw = GridPowers::new(fd, sigma, sigma, ell);
    let mut ledger = Vec::new();
    for j in 2..=sigma {
        let lhs = u.compose_on_grid(&pw, omega);
        let rhs = r.compose_collocated(&u, j)?;
        for p in 0..nu {
            let target = coords[p];
            for m in t.degree_range(j) {
                let exps = t.exponents(m);
                let reduced = restrict(exps, coords);
                let lm = lambda_power(&lambda, exps);
                for k in -(ell as i64)..=ell as i64 {
                    let g = lhs.get(p, m, k) - rhs.get(p, m, k);
                    if g == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let den = lambda[target] - lm * C64::from_polar(1.0, k as f64 * omega);
                    let choice = classify(reduced.is_some(), den.norm(), k, j, opts, || {
                        format!("target {target}, monomial {exps:?}, harmonic {k}")
                    })?;
                    match choice {
                        Choice::Conjugate => {
                            let rm = tr.index_of(reduced.as_ref().unwrap()).unwrap();
                            r.set(p, rm, k, g);
                            ledger.push(ResonanceHit {
                                target,
                                exponents: exps.to_vec(),
                                harmonic: k,
                                denominator: den.norm(),
                                internal: true,
                            });
                        }
                        Choice::Solve => u.set(p, m, k, g / den),
                    }
                }
            }
        }
    }
    u.symmetrize();
    r.symmetrize();
    Ok(FoliationModel {
        u,
        r,
        coords: coords.to_vec(),
        nu,
        resonant_terms: ledger,
        autonomous: opts.autonomous,
    })
}

/// Foliation for the coordinates not in `coords`. When `coords` covers the
/// whole space the result has no outputs: every point is its own leaf.
pub fn complementary_foliation(
    fd: &PowerFourierMap,
    omega: f64,
    coords: &[usize],
    opts: &SolveOptions,
) -> Result<FoliationModel> {
    let rest: Vec<usize> = (0..fd.n_in).filter(|c| !coords.contains(c)).collect();
    if rest.is_empty() {
        let inputs = fd.conj.as_ref().map_or_else(|| (0..fd.n_in).collect(), |c| c.inputs.clone());
        return Ok(FoliationModel {
            u: PowerFourierMap::zeros(fd.n_in, 0, fd.sigma, fd.ell, fd.omega_f)
                .with_conjugation(Conjugation { inputs, outputs: vec![] }),
            r: PowerFourierMap::zeros(0, 0, fd.sigma, fd.ell, fd.omega_f),
            coords: vec![],
            nu: 0,
            resonant_terms: vec![],
            autonomous: opts.autonomous,
        });
    }
    solve_foliation(fd, omega, &rest, opts)
}

/// Largest coefficient of `R(U) - U(Fd, theta + omega)` through order sigma.
pub fn invariance_defect(fol: &FoliationModel, fd: &PowerFourierMap, omega: f64) -> Result<f64> {
    let lhs = fol.r.compose_collocated(&fol.u, fd.sigma)?;
    let rhs = fol.u.compose_on_grid(&GridPowers::new(fd, fd.sigma, fd.sigma, fd.ell), omega);
    Ok(lhs.sub(&rhs).max_abs())
}

/// Points `x` on the sphere `|x| = radius` that are real in the frame
/// described by `partner`, paired with angles. Deterministic.
pub fn frame_sample_points(partner: &[usize], radius: f64, count: usize) -> Vec<(Vec<C64>, f64)> {
    let n = partner.len();
    // Weyl sequences with distinct irrational steps
    let step = |s: usize, i: usize| ((s as f64 + 1.0) * ((i as f64 + 2.0).sqrt() * 0.618_033_988_749_895)).fract();
    (0..count)
        .map(|s| {
            let mut x = vec![C64::new(0.0, 0.0); n];
            for i in 0..n {
                let p = partner[i];
                if p == i {
                    x[i] = C64::new(step(s, 2 * i) - 0.5, 0.0);
                } else if p > i {
                    x[i] = C64::new(step(s, 2 * i) - 0.5, step(s, 2 * i + 1) - 0.5);
                    x[p] = x[i].conj();
                }
            }
            let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
            x.iter_mut().for_each(|v| *v *= radius / norm);
            let theta = 2.0 * std::f64::consts::PI * step(s, 2 * n + 7);
            (x, theta)
        })
        .collect()
}

/// Largest `|R(U(x, theta)) - U(Fd(x, theta), theta + omega)| / |x|^(sigma + 1)`
/// over the given points, with `|x|` floored at `1e-300`.
pub fn invariance_residual(
    fol: &FoliationModel,
    fd: &PowerFourierMap,
    omega: f64,
    points: &[(Vec<C64>, f64)],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x, theta) in points {
        let ux = fol.u.evaluate(x, *theta)?;
        let lhs = fol.r.evaluate(&ux, *theta)?;
        let fx = fd.evaluate(x, *theta)?;
        let rhs = fol.u.evaluate(&fx, theta + omega)?;
        let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let size = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(err / size.powi(fd.sigma as i32 + 1).max(1e-300));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_map(lam: f64, quad: f64, sigma: usize) -> PowerFourierMap {
        let mut f = PowerFourierMap::zeros(1, 1, sigma, 0, 0.0);
        f.set(0, 1, 0, C64::new(lam, 0.0));
        f.set(0, 2, 0, C64::new(quad, 0.0));
        f.with_conjugation(Conjugation::real(1, 1))
    }

    /// Planar map with a conjugate pair `lam, conj(lam)` and a cubic term.
    fn pair_map(lam: C64, c: C64, sigma: usize, ell: usize) -> PowerFourierMap {
        let mut f = PowerFourierMap::zeros(2, 2, sigma, ell, 1.0);
        let t = f.monomials();
        f.set(0, 1, 0, lam);
        f.set(1, 2, 0, lam.conj());
        f.set(0, t.index_of(&[2, 1]).unwrap(), 0, c);
        f.set(1, t.index_of(&[1, 2]).unwrap(), 0, c.conj());
        f.set(0, t.index_of(&[2, 0]).unwrap(), 0, C64::new(0.3, -0.1));
        f.set(1, t.index_of(&[0, 2]).unwrap(), 0, C64::new(0.3, 0.1));
        f.with_conjugation(Conjugation { inputs: vec![1, 0], outputs: vec![1, 0] })
    }

    #[test]
    fn scalar_toy_coefficient() {
        // x -> 0.5 x + x^2 projected onto itself: Gamma = U1 * 1 = 1
        let f = scalar_map(0.5, 1.0, 2);
        let fol = solve_foliation(&f, 0.0, &[0], &SolveOptions { delta_int: 0.01, ..Default::default() }).unwrap();
        assert!((fol.u.get(0, 2, 0) - C64::new(4.0, 0.0)).norm() < 1e-14);
        assert_eq!(fol.r.get(0, 2, 0), C64::new(0.0, 0.0));
        assert!(fol.resonant_terms.is_empty());
    }

    #[test]
    fn near_resonant_cubic_goes_to_r() {
        let lam = C64::from_polar(0.99, 0.1);
        let f = pair_map(lam, C64::new(-0.2, 0.05), 3, 0);
        let fol = solve_foliation(&f, 0.4, &[0, 1], &SolveOptions::default()).unwrap();
        let t = Monomials::get(2, 3);
        let m = t.index_of(&[2, 1]).unwrap();
        assert_eq!(fol.u.get(0, m, 0), C64::new(0.0, 0.0));
        assert!(fol.r.get(0, m, 0).norm() > 0.0);
        let hit = fol.resonant_terms.iter().find(|h| h.target == 0 && h.exponents == vec![2, 1]).unwrap();
        assert!((hit.denominator - (lam * (1.0 - lam.norm_sqr())).norm()).abs() < 1e-14);
        assert!(hit.denominator < 0.0198 && hit.denominator > 0.0196);
        assert!(invariance_defect(&fol, &f, 0.4).unwrap() < 1e-12);
    }

    #[test]
    fn linear_r_variant_solves_everything() {
        let f = pair_map(C64::from_polar(0.99, 0.1), C64::new(-0.2, 0.05), 3, 0);
        let opts = SolveOptions { r_order: 1, ..Default::default() };
        let fol = solve_foliation(&f, 0.4, &[0, 1], &opts).unwrap();
        assert!(fol.resonant_terms.is_empty());
        assert!(fol.r.comps.iter().all(|c| c.degree_part(1).sub(c).is_zero()));
        assert!(invariance_defect(&fol, &f, 0.4).unwrap() < 1e-12);
    }

    #[test]
    fn exact_resonance_is_fatal_outside_index_set() {
        // lambda_0 = lambda_1^2 with x_1 outside the index set
        let mut f = PowerFourierMap::zeros(2, 2, 2, 0, 0.0);
        f.set(0, 1, 0, C64::new(0.25, 0.0));
        f.set(1, 2, 0, C64::new(0.5, 0.0));
        let t = f.monomials();
        f.set(0, t.index_of(&[0, 2]).unwrap(), 0, C64::new(1.0, 0.0));
        let e = solve_foliation(&f, 0.0, &[0], &SolveOptions::default()).unwrap_err();
        assert!(matches!(e, Error::ExternalResonance(_)), "{e}");
    }

    #[test]
    fn parametric_resonance_blocks_autonomous_r() {
        // lambda = lambda^2 e^{i omega} exactly for harmonic 1
        let omega = 0.7;
        let mut f = PowerFourierMap::zeros(1, 1, 2, 1, 1.0);
        f.set(0, 1, 0, C64::from_polar(1.0, -omega));
        for k in -1..=1 {
            f.set(0, 2, k, C64::new(1.0, 0.0));
        }
        let e = solve_foliation(&f, omega, &[0], &SolveOptions { delta_int: 0.5, ..Default::default() });
        assert!(matches!(e, Err(Error::ParametricResonance(_))), "{e:?}");
        let ok = solve_foliation(&f, omega, &[0], &SolveOptions { delta_int: 0.5, autonomous: false, ..Default::default() })
            .unwrap();
        assert!(ok.resonant_terms.iter().any(|h| h.harmonic == 1));
    }

    #[test]
    fn complement_partitions_coordinates() {
        let mut f = PowerFourierMap::zeros(3, 3, 3, 0, 0.0);
        for (i, l) in [0.3, 0.5, 0.8].iter().enumerate() {
            f.set(i, 1 + i, 0, C64::new(*l, 0.0));
        }
        let t = f.monomials();
        f.set(2, t.index_of(&[1, 1, 0]).unwrap(), 0, C64::new(0.7, 0.0));
        f.set(0, t.index_of(&[0, 0, 2]).unwrap(), 0, C64::new(-0.4, 0.0));
        let f = f.with_conjugation(Conjugation::real(3, 3));
        let u = solve_foliation(&f, 0.0, &[2], &SolveOptions::default()).unwrap();
        let v = complementary_foliation(&f, 0.0, &[2], &SolveOptions::default()).unwrap();
        assert_eq!(v.coords, vec![0, 1]);
        assert_eq!(u.nu + v.nu, 3);
        assert!(invariance_defect(&u, &f, 0.0).unwrap() < 1e-13);
        assert!(invariance_defect(&v, &f, 0.0).unwrap() < 1e-13);
    }

    #[test]
    fn linear_map_has_zero_residual() {
        let mut f = PowerFourierMap::zeros(2, 2, 1, 0, 0.0);
        f.set(0, 1, 0, C64::new(0.4, 0.0));
        f.set(1, 2, 0, C64::new(0.7, 0.0));
        let f = f.with_conjugation(Conjugation::real(2, 2));
        let fol = solve_foliation(&f, 0.0, &[1], &SolveOptions::default()).unwrap();
        let pts = frame_sample_points(&[0, 1], 0.3, 20);
        assert!(invariance_residual(&fol, &f, 0.0, &pts).unwrap() < 1e-14);
    }

    #[test]
    fn sample_points_respect_conjugation() {
        for (x, th) in frame_sample_points(&[1, 0, 2], 0.2, 10) {
            assert!((x[0] - x[1].conj()).norm() < 1e-15);
            assert_eq!(x[2].im, 0.0);
            let r = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!((r - 0.2).abs() < 1e-15);
            assert!((0.0..2.0 * std::f64::consts::PI).contains(&th));
        }
    }
}
