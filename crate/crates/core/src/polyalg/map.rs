//! Vector-valued power–Fourier maps `(x, theta) -> y`.

use serde::{Deserialize, Serialize};

use super::elementary::{Elementary, TruncatedAlgebra};
use super::monomials::Monomials;
use super::scalar::{Scalar, C64};
use super::jet::Jet;
use super::series::{convolve_into, grid_angles, grid_size, Series};
use crate::error::{Error, Result};

/// Conjugation symmetry of a map: for real points `x` (meaning
/// `x[inputs[v]] == conj(x[v])`), `conj(G_i(x, theta)) = G_{outputs[i]}(x, theta)`.
/// Real maps of real arguments use identity permutations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conjugation {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl Conjugation {
    pub fn real(n_in: usize, n_out: usize) -> Self {
        Conjugation {
            inputs: (0..n_in).collect(),
            outputs: (0..n_out).collect(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.inputs.iter().enumerate().all(|(i, &p)| i == p)
            && self.outputs.iter().enumerate().all(|(i, &p)| i == p)
    }
}

#[derive(Clone, Debug)]
pub struct PowerFourierMap {
    pub n_in: usize,
    pub n_out: usize,
    pub sigma: usize,
    pub ell: usize,
    pub omega_f: f64,
    pub conj: Option<Conjugation>,
    pub comps: Vec<Series>,
}

/// Lifted operations accepted by [`lift_elementary`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LiftOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Sin,
    Cos,
    Pow(f64),
}

/// Apply an elementary operation componentwise to maps of equal shape.
pub fn lift_elementary(op: LiftOp, args: &[&PowerFourierMap]) -> Result<PowerFourierMap> {
    let arity = match op {
        LiftOp::Add | LiftOp::Sub | LiftOp::Mul | LiftOp::Div => 2,
        _ => 1,
    };
    if args.len() != arity {
        return Err(Error::DimensionMismatch(format!(
            "{op:?} takes {arity} arguments, got {}",
            args.len()
        )));
    }
    let a = args[0];
    if arity == 2 {
        let b = args[1];
        if (a.n_in, a.n_out, a.sigma, a.ell) != (b.n_in, b.n_out, b.sigma, b.ell) {
            return Err(Error::DimensionMismatch("lifted arguments differ in shape".into()));
        }
    }
    let mut comps = Vec::with_capacity(a.n_out);
    for i in 0..a.n_out {
        let x = &a.comps[i];
        let c = match op {
            LiftOp::Add => x.add(&args[1].comps[i]),
            LiftOp::Sub => x.sub(&args[1].comps[i]),
            LiftOp::Mul => x.mul(&args[1].comps[i]),
            LiftOp::Div => TruncatedAlgebra::div(x, &args[1].comps[i])?,
            LiftOp::Sqrt => x.apply(Elementary::Sqrt)?,
            LiftOp::Sin => x.apply(Elementary::Sin)?,
            LiftOp::Cos => x.apply(Elementary::Cos)?,
            LiftOp::Pow(p) => x.apply(Elementary::Pow(p))?,
        };
        comps.push(c);
    }
    let conj = match op {
        LiftOp::Add | LiftOp::Sub | LiftOp::Mul | LiftOp::Div => {
            if a.conj.is_some() && a.conj == args[1].conj {
                a.conj.clone()
            } else {
                None
            }
        }
        _ => a.conj.clone().filter(|c| c.is_real()),
    };
    Ok(PowerFourierMap { comps, conj, ..a.shape_only() })
}

/// Monomial powers `H(x, theta)^m` for every monomial `m` of a table,
/// reusable across compositions with the same inner map.
pub struct MapPowers {
    pub sigma: usize,
    pub ell: usize,
    pub n_in: usize,
    pub powers: Vec<Series>,
}

impl MapPowers {
    pub fn new(h: &PowerFourierMap, outer_sigma: usize) -> Self {
        let t = Monomials::get(h.n_out, outer_sigma);
        let mut powers: Vec<Series> = Vec::with_capacity(t.len());
        powers.push(Series::constant(h.n_in, h.sigma, h.ell, C64::one()));
        for m in 1..t.len() {
            let (p, v) = t.parent(m).unwrap();
            let next = powers[p].mul(&h.comps[v]);
            powers.push(next);
        }
        MapPowers {
            sigma: h.sigma,
            ell: h.ell,
            n_in: h.n_in,
            powers,
        }
    }
}

/// Monomial powers of an inner map sampled on the angle grid of `ell`.
/// Compositions built from these are exact products at every angle,
/// projected onto the harmonics only once at the end.
pub struct GridPowers {
    pub ell: usize,
    pub angles: Vec<f64>,
    pub n_in: usize,
    pub sigma: usize,
    /// `powers[q][m]` is the polynomial `h(., angles[q])^m`.
    pub powers: Vec<Vec<Jet<C64>>>,
}

impl GridPowers {
    /// `h` must vanish at the origin when `max_degree < outer_sigma`.
    pub fn new(h: &PowerFourierMap, outer_sigma: usize, max_degree: usize, ell: usize) -> Self {
        let t = Monomials::get(h.n_out, outer_sigma);
        let top = t.count_up_to(max_degree.min(outer_sigma));
        let angles = grid_angles(grid_size(ell));
        let powers = angles
            .iter()
            .map(|&th| {
                let inner: Vec<Jet<C64>> = h.comps.iter().map(|c| c.at_theta(th)).collect();
                let mut pw = Vec::with_capacity(top);
                pw.push(Jet::constant(h.n_in, h.sigma, C64::one()));
                for m in 1..top {
                    let (p, v) = t.parent(m).unwrap();
                    let next = pw[p].mul_trunc(&inner[v], max_degree);
                    pw.push(next);
                }
                pw
            })
            .collect();
        GridPowers {
            ell,
            angles,
            n_in: h.n_in,
            sigma: h.sigma,
            powers,
        }
    }
}

/// `outer(inner(x))` for polynomials, through total degree `max_degree`.
/// `inner` must vanish at the origin when `max_degree` is below the order
/// of `outer`.
pub fn compose_jets(outer: &[Jet<C64>], inner: &[Jet<C64>], max_degree: usize) -> Vec<Jet<C64>> {
    let Some(first) = outer.first() else { return Vec::new() };
    let t = first.monomials().clone();
    assert_eq!(t.nvars(), inner.len(), "outer arity differs from inner length");
    let (nv, sigma) = (inner[0].nvars(), inner[0].sigma());
    let top = t.count_up_to(max_degree.min(t.sigma()));
    let mut pw = Vec::with_capacity(top);
    pw.push(Jet::constant(nv, sigma, C64::one()));
    for m in 1..top {
        let (p, v) = t.parent(m).unwrap();
        let next = pw[p].mul_trunc(&inner[v], max_degree);
        pw.push(next);
    }
    outer
        .iter()
        .map(|o| {
            let mut acc = Jet::zeros(nv, sigma);
            for (m, c) in o.coeffs().iter().enumerate().take(top) {
                if !c.is_zero() {
                    acc.axpy(*c, &pw[m]);
                }
            }
            acc
        })
        .collect()
}

impl PowerFourierMap {
    /// Polynomials in `x` at a fixed angle, one per output.
    pub fn at_theta(&self, theta: f64) -> Vec<Jet<C64>> {
        self.comps.iter().map(|c| c.at_theta(theta)).collect()
    }

    /// Map from samples `samples[q][i]` of every output on the grid of `ell`.
    pub fn from_grid_samples(samples: &[Vec<Jet<C64>>], ell: usize, omega_f: f64) -> Self {
        let n_out = samples[0].len();
        let first = &samples[0][0];
        let comps = (0..n_out)
            .map(|i| {
                let s: Vec<Jet<C64>> = samples.iter().map(|row| row[i].clone()).collect();
                Series::from_grid(&s, ell)
            })
            .collect();
        PowerFourierMap {
            n_in: first.nvars(),
            n_out,
            sigma: first.sigma(),
            ell,
            omega_f,
            conj: None,
            comps,
        }
    }

    /// `self(h(x, theta), theta + shift)` from grid powers of `h`.
    pub fn compose_on_grid(&self, pw: &GridPowers, shift: f64) -> Self {
        let mut samples: Vec<Vec<Jet<C64>>> = vec![Vec::with_capacity(pw.angles.len()); self.n_out];
        for (q, &th) in pw.angles.iter().enumerate() {
            let p = &pw.powers[q];
            for (i, comp) in self.comps.iter().enumerate() {
                let outer = comp.at_theta(th + shift);
                let mut acc = Jet::zeros(pw.n_in, pw.sigma);
                for (m, c) in outer.coeffs().iter().enumerate().take(p.len()) {
                    if !c.is_zero() {
                        acc.axpy(*c, &p[m]);
                    }
                }
                samples[i].push(acc);
            }
        }
        PowerFourierMap {
            n_in: pw.n_in,
            n_out: self.n_out,
            sigma: pw.sigma,
            ell: pw.ell,
            omega_f: self.omega_f,
            conj: None,
            comps: samples.iter().map(|s| Series::from_grid(s, pw.ell)).collect(),
        }
    }

    /// `self(h(x, theta), theta)` through total degree `max_degree`, computed
    /// by collocation on the angle grid. `h` must vanish at the origin when
    /// `max_degree` is below the order of `self`.
    pub fn compose_collocated(&self, h: &PowerFourierMap, max_degree: usize) -> Result<Self> {
        if h.n_out != self.n_in {
            return Err(Error::DimensionMismatch(format!(
                "outer map takes {} arguments, inner map yields {}",
                self.n_in, h.n_out
            )));
        }
        let pw = GridPowers::new(h, self.sigma, max_degree, self.ell.max(h.ell));
        let mut out = self.compose_on_grid(&pw, 0.0);
        out.conj = match (&self.conj, &h.conj) {
            (Some(g), Some(hc)) if g.inputs == hc.outputs => Some(Conjugation {
                inputs: hc.inputs.clone(),
                outputs: g.outputs.clone(),
            }),
            _ => None,
        };
        Ok(out)
    }

    pub fn zeros(n_in: usize, n_out: usize, sigma: usize, ell: usize, omega_f: f64) -> Self {
        PowerFourierMap {
            n_in,
            n_out,
            sigma,
            ell,
            omega_f,
            conj: None,
            comps: (0..n_out).map(|_| Series::zeros(n_in, sigma, ell)).collect(),
        }
    }

    pub fn identity(n: usize, sigma: usize, ell: usize, omega_f: f64) -> Self {
        let mut g = Self::zeros(n, n, sigma, ell, omega_f);
        if sigma >= 1 {
            for i in 0..n {
                g.comps[i].set(1 + i, 0, C64::one());
            }
        }
        g.conj = Some(Conjugation::real(n, n));
        g
    }

    fn shape_only(&self) -> Self {
        PowerFourierMap {
            n_in: self.n_in,
            n_out: self.n_out,
            sigma: self.sigma,
            ell: self.ell,
            omega_f: self.omega_f,
            conj: None,
            comps: Vec::new(),
        }
    }

    pub fn with_conjugation(mut self, c: Conjugation) -> Self {
        self.conj = Some(c);
        self
    }

    pub fn monomials(&self) -> std::sync::Arc<Monomials> {
        Monomials::get(self.n_in, self.sigma)
    }

    pub fn get(&self, i: usize, m: usize, k: i64) -> C64 {
        self.comps[i].get(m, k)
    }

    pub fn set(&mut self, i: usize, m: usize, k: i64, v: C64) {
        self.comps[i].set(m, k, v);
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn resized(&self, sigma: usize, ell: usize) -> Self {
        PowerFourierMap {
            sigma,
            ell,
            conj: self.conj.clone(),
            comps: self.comps.iter().map(|c| c.resized(sigma, ell)).collect(),
            ..self.shape_only()
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            a.add_assign(b);
        }
        if self.conj != other.conj {
            out.conj = None;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            a.sub_assign(b);
        }
        if self.conj != other.conj {
            out.conj = None;
        }
        out
    }

    pub fn evaluate(&self, x: &[C64], theta: f64) -> Result<Vec<C64>> {
        if x.len() != self.n_in {
            return Err(Error::DimensionMismatch(format!(
                "map takes {} arguments, got {}",
                self.n_in,
                x.len()
            )));
        }
        let theta = theta.rem_euclid(2.0 * std::f64::consts::PI);
        let pw = self.monomials().powers(x);
        let nh = 2 * self.ell + 1;
        let tw: Vec<C64> = (0..nh)
            .map(|i| C64::from_polar(1.0, (i as f64 - self.ell as f64) * theta))
            .collect();
        Ok(self
            .comps
            .iter()
            .map(|s| {
                let mut acc = C64::zero();
                for (m, p) in pw.iter().enumerate() {
                    let f = s.fourier(m);
                    let mut v = C64::zero();
                    for (a, b) in f.iter().zip(&tw) {
                        v += *a * *b;
                    }
                    acc += v * *p;
                }
                acc
            })
            .collect())
    }

    pub fn evaluate_real(&self, x: &[f64], theta: f64) -> Result<Vec<C64>> {
        let xc: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.evaluate(&xc, theta)
    }

    /// `result(x, theta) = self(h(x, theta), theta)`.
    pub fn compose(&self, h: &PowerFourierMap) -> Result<Self> {
        if h.n_out != self.n_in {
            return Err(Error::DimensionMismatch(format!(
                "outer map takes {} arguments, inner map yields {}",
                self.n_in, h.n_out
            )));
        }
        let ell = self.ell.max(h.ell);
        let hh = if h.ell == ell { h.clone() } else { h.resized(h.sigma, ell) };
        let powers = MapPowers::new(&hh, self.sigma);
        let mut out = self.compose_with_powers(&powers);
        out.conj = match (&self.conj, &h.conj) {
            (Some(g), Some(hc)) if g.inputs == hc.outputs => Some(Conjugation {
                inputs: hc.inputs.clone(),
                outputs: g.outputs.clone(),
            }),
            _ => None,
        };
        Ok(out)
    }

    /// Composition with precomputed powers of the inner map.
    pub fn compose_with_powers(&self, pw: &MapPowers) -> Self {
        let ell = pw.ell;
        let nh = 2 * ell + 1;
        let mut comps: Vec<Series> =
            (0..self.n_out).map(|_| Series::zeros(pw.n_in, pw.sigma, ell)).collect();
        let nmon = self.monomials().len().min(pw.powers.len());
        let mut g = vec![C64::zero(); nh];
        for (i, out) in comps.iter_mut().enumerate() {
            let src = &self.comps[i];
            for m in 0..nmon {
                let f = src.fourier(m);
                if f.iter().all(|v| v.is_zero()) {
                    continue;
                }
                g.iter_mut().for_each(|v| *v = C64::zero());
                let l_src = src.ell();
                for (j, &v) in f.iter().enumerate() {
                    let k = j as i64 - l_src as i64;
                    if k.unsigned_abs() as usize <= ell {
                        g[(k + ell as i64) as usize] = v;
                    }
                }
                let p = &pw.powers[m];
                let pd = p.data();
                let od = out.data_mut();
                for (mm, ch) in pd.chunks(nh).enumerate() {
                    if ch.iter().all(|v| v.is_zero()) {
                        continue;
                    }
                    convolve_into(&g, ch, ell, &mut od[mm * nh..(mm + 1) * nh]);
                }
            }
        }
        PowerFourierMap {
            n_in: pw.n_in,
            n_out: self.n_out,
            sigma: pw.sigma,
            ell,
            omega_f: self.omega_f,
            conj: None,
            comps,
        }
    }

    /// `result(x, theta) = self(x, theta - delta)`.
    pub fn shift(&self, delta: f64) -> Self {
        PowerFourierMap {
            conj: self.conj.clone(),
            comps: self.comps.iter().map(|c| c.shift(delta)).collect(),
            ..self.shape_only()
        }
    }

    /// Harmonics of the degree-one coefficient matrix: `a[k + ell][(i, j)]`
    /// multiplies `x_j` in output `i`.
    pub fn linear_part(&self) -> Vec<nalgebra::DMatrix<C64>> {
        let nh = 2 * self.ell + 1;
        (0..nh)
            .map(|kk| {
                nalgebra::DMatrix::from_fn(self.n_out, self.n_in, |i, j| {
                    if self.sigma == 0 {
                        C64::zero()
                    } else {
                        self.comps[i].fourier(1 + j)[kk]
                    }
                })
            })
            .collect()
    }

    /// Harmonics of the value at `x = 0`, per output.
    pub fn constant_part(&self) -> Vec<Vec<C64>> {
        self.comps.iter().map(|c| c.fourier(0).to_vec()).collect()
    }

    /// Largest violation of the conjugation symmetry, `0` when none is declared.
    pub fn reality_defect(&self) -> f64 {
        let Some(cj) = &self.conj else { return 0.0 };
        let t = self.monomials();
        let mut e = vec![0u8; self.n_in];
        let mut worst: f64 = 0.0;
        for i in 0..self.n_out {
            let pi = cj.outputs[i];
            for m in 0..t.len() {
                let ex = t.exponents(m);
                for (v, &ev) in ex.iter().enumerate() {
                    e[cj.inputs[v]] = ev;
                }
                let pm = t.index_of(&e).unwrap();
                for k in -(self.ell as i64)..=self.ell as i64 {
                    let d = self.get(pi, pm, -k) - self.get(i, m, k).conj();
                    worst = worst.max(d.norm());
                }
            }
        }
        worst
    }

    /// Overwrite every coefficient with the average of itself and its
    /// conjugate partner, removing round-off asymmetry.
    pub fn symmetrize(&mut self) {
        let Some(cj) = self.conj.clone() else { return };
        let t = self.monomials();
        let src = self.clone();
        let mut e = vec![0u8; self.n_in];
        for i in 0..self.n_out {
            let pi = cj.outputs[i];
            for m in 0..t.len() {
                let ex = t.exponents(m);
                for (v, &ev) in ex.iter().enumerate() {
                    e[cj.inputs[v]] = ev;
                }
                let pm = t.index_of(&e).unwrap();
                for k in -(self.ell as i64)..=self.ell as i64 {
                    let v = 0.5 * (src.get(i, m, k) + src.get(pi, pm, -k).conj());
                    self.set(i, m, k, v);
                }
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MapDocument::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: MapDocument = serde_json::from_str(s)?;
        doc.into_map()
    }
}

#[derive(Serialize, Deserialize)]
struct MapDocument {
    n_in: usize,
    n_out: usize,
    sigma: usize,
    ell: usize,
    omega_f: f64,
    coeffs: Vec<(usize, Vec<u8>, i64, f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conjugation: Option<Conjugation>,
}

impl From<&PowerFourierMap> for MapDocument {
    fn from(g: &PowerFourierMap) -> Self {
        let t = g.monomials();
        let mut coeffs = Vec::new();
        for i in 0..g.n_out {
            for m in 0..t.len() {
                for k in -(g.ell as i64)..=g.ell as i64 {
                    let v = g.get(i, m, k);
                    if !v.is_zero() {
                        coeffs.push((i, t.exponents(m).to_vec(), k, v.re, v.im));
                    }
                }
            }
        }
        MapDocument {
            n_in: g.n_in,
            n_out: g.n_out,
            sigma: g.sigma,
            ell: g.ell,
            omega_f: g.omega_f,
            coeffs,
            conjugation: g.conj.clone(),
        }
    }
}

impl MapDocument {
    fn into_map(self) -> Result<PowerFourierMap> {
        let mut g = PowerFourierMap::zeros(self.n_in, self.n_out, self.sigma, self.ell, self.omega_f);
        let t = g.monomials();
        for (i, e, k, re, im) in self.coeffs {
            let m = (i < self.n_out)
                .then(|| t.index_of(&e))
                .flatten()
                .filter(|_| k.unsigned_abs() as usize <= self.ell)
                .ok_or_else(|| {
                    Error::DimensionMismatch(format!("coefficient ({i}, {e:?}, {k}) out of range"))
                })?;
            g.set(i, m, k, C64::new(re, im));
        }
        g.conj = self.conjugation;
        Ok(g)
    }
}
