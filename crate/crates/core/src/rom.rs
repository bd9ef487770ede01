//! Instantaneous frequency and damping of a two-dimensional reduced model.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Method};
use crate::polyalg::{grid_angles, grid_size, Jet, PowerFourierMap, ScalarRadialSeries, Series, C64};

/// Terms of the reduced dynamics allowed to break rotation equivariance.
pub const EQUIVARIANCE_TOL: f64 = 1e-10;

/// Reduced dynamics `z -> z p(|z|^2)` (or `z' = z p(|z|^2)` in continuous
/// time), read off the coefficients of `R`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolarForm {
    /// `p[b]` multiplies `|z|^(2b)`.
    pub p: Vec<C64>,
    pub continuous: bool,
    /// Reduced coordinate playing the role of `z`; the other is its conjugate.
    pub z_index: usize,
    pub conj_index: usize,
}

/// Which reduced coordinate is `z`: the one rotating forwards.
pub fn z_index(r: &PowerFourierMap) -> Result<(usize, usize)> {
    if r.n_in != 2 || r.n_out != 2 {
        return Err(Error::DimensionMismatch(format!(
            "polar form needs a two-dimensional reduced model, got {} -> {}",
            r.n_in, r.n_out
        )));
    }
    let lin0 = r.get(0, 1, 0);
    Ok(if lin0.im >= 0.0 { (0, 1) } else { (1, 0) })
}

pub fn to_polar(r: &PowerFourierMap, continuous: bool) -> Result<PolarForm> {
    let (zi, ci) = z_index(r)?;
    let t = r.monomials();
    let mut p = vec![C64::new(0.0, 0.0); r.sigma.div_ceil(2).max(1)];
    let mut dev: f64 = 0.0;
    for m in 0..t.len() {
        let e = t.exponents(m);
        let (a, b) = (e[zi] as usize, e[ci] as usize);
        for k in -(r.ell as i64)..=r.ell as i64 {
            let c = r.get(zi, m, k);
            if k == 0 && a == b + 1 {
                p[b] = c;
            } else {
                dev = dev.max(c.norm());
            }
        }
    }
    if dev > EQUIVARIANCE_TOL {
        return Err(Error::NotRotationEquivariant(dev));
    }
    Ok(PolarForm { p, continuous, z_index: zi, conj_index: ci })
}

impl PolarForm {
    pub fn p_at(&self, r: f64) -> C64 {
        let u = r * r;
        self.p.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * u + c)
    }

    /// Amplitude after one step, `R(r) = r |p(r^2)|`.
    pub fn radius(&self, r: f64) -> f64 {
        r * self.p_at(r).norm()
    }

    /// Rotation over one step, `T(r) = arg p(r^2)`, continued from `r = 0`
    /// into `[0, 2 pi)`.
    pub fn angle(&self, r: f64) -> f64 {
        let p0 = self.p[0];
        let base = p0.arg().rem_euclid(2.0 * PI);
        base + (self.p_at(r) / p0).arg()
    }

    /// `r' = r Re p(r^2)` of the continuous form.
    pub fn radial_rate(&self, r: f64) -> f64 {
        r * self.p_at(r).re
    }

    /// `gamma' = Im p(r^2)` of the continuous form.
    pub fn angular_rate(&self, r: f64) -> f64 {
        self.p_at(r).im
    }

    /// `(R, T)` sampled on a grid.
    pub fn sample(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if self.continuous {
            (r.iter().map(|&x| self.radial_rate(x)).collect(), r.iter().map(|&x| self.angular_rate(x)).collect())
        } else {
            (r.iter().map(|&x| self.radius(x)).collect(), r.iter().map(|&x| self.angle(x)).collect())
        }
    }

    pub fn fitted(&self, r: &[f64], degree: usize) -> (ScalarRadialSeries, ScalarRadialSeries) {
        let (a, b) = self.sample(r);
        (ScalarRadialSeries::fit(r, &a, degree), ScalarRadialSeries::fit(r, &b, degree))
    }

    /// Advance `z` by one sampling period. The continuous form is integrated
    /// in polar coordinates with RK4.
    pub fn step(&self, z: C64, dt: f64, steps: usize) -> C64 {
        if !self.continuous {
            return z * self.p_at(z.norm());
        }
        let (mut r, mut g) = (z.norm(), z.arg());
        let h = dt / steps as f64;
        let f = |r: f64| (self.radial_rate(r), self.angular_rate(r));
        for _ in 0..steps {
            let k1 = f(r);
            let k2 = f(r + 0.5 * h * k1.0);
            let k3 = f(r + 0.5 * h * k2.0);
            let k4 = f(r + h * k3.0);
            r += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            g += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        C64::from_polar(r, g)
    }
}

/// Torus averages of the immersion `W(r, gamma, theta)` and its derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    /// mean `|W|^2`
    pub norm2: f64,
    /// mean `Re <W, W_r>`
    pub w_wr: f64,
    /// mean `Re <W_r, W_gamma>`
    pub wr_wg: f64,
    /// mean `|W_gamma|^2`
    pub wg_wg: f64,
}

pub trait MomentSource {
    fn moments(&self, r: f64) -> Moments;
}

/// Exact averages from the coefficients: with `z = r e^{i gamma}` every
/// component is `sum_{d,k} q_{d,k}(r) e^{i (d gamma + k theta)}`, so the
/// averages follow from orthogonality.
#[derive(Clone, Debug)]
pub struct ParsevalMoments {
    /// `(d, q)` with `q[p]` multiplying `r^p`.
    groups: Vec<(f64, Vec<C64>)>,
}

impl ParsevalMoments {
    pub fn new(w: &PowerFourierMap, z_index: usize, conj_index: usize) -> Self {
        let t = w.monomials();
        let mut keyed: std::collections::BTreeMap<(usize, i64, i64), Vec<C64>> = Default::default();
        for (j, s) in w.comps.iter().enumerate() {
            for m in 0..t.len() {
                let e = t.exponents(m);
                let (a, b) = (e[z_index] as i64, e[conj_index] as i64);
                for k in -(w.ell as i64)..=w.ell as i64 {
                    let c = s.get(m, k);
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let q = keyed.entry((j, a - b, k)).or_insert_with(|| vec![C64::new(0.0, 0.0); w.sigma + 1]);
                    q[(a + b) as usize] += c;
                }
            }
        }
        ParsevalMoments { groups: keyed.into_iter().map(|((_, d, _), q)| (d as f64, q)).collect() }
    }
}

fn poly_and_derivative(q: &[C64], r: f64) -> (C64, C64) {
    let mut v = C64::new(0.0, 0.0);
    let mut dv = C64::new(0.0, 0.0);
    for c in q.iter().rev() {
        dv = dv * r + v;
        v = v * r + c;
    }
    (v, dv)
}

impl MomentSource for ParsevalMoments {
    fn moments(&self, r: f64) -> Moments {
        let mut m = Moments::default();
        for (d, q) in &self.groups {
            let (v, dv) = poly_and_derivative(q, r);
            let vg = C64::new(0.0, *d) * v;
            m.norm2 += v.norm_sqr();
            m.w_wr += (v * dv.conj()).re;
            m.wr_wg += (dv * vg.conj()).re;
            m.wg_wg += vg.norm_sqr();
        }
        m
    }
}

/// `(W, W_r, W_gamma)` at `(r, gamma, theta)`.
pub type ImmersionSample = (Vec<C64>, Vec<C64>, Vec<C64>);

/// Averages by the trapezoidal rule on a uniform `(gamma, theta)` grid.
pub struct QuadratureMoments<F> {
    pub sample: F,
    pub n_gamma: usize,
    pub n_theta: usize,
    /// Offset of the `gamma` grid; the averages do not depend on it.
    pub gamma_offset: f64,
}

impl<F: Fn(f64, f64, f64) -> ImmersionSample> MomentSource for QuadratureMoments<F> {
    fn moments(&self, r: f64) -> Moments {
        let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>();
        let mut m = Moments::default();
        for g in grid_angles(self.n_gamma) {
            for th in grid_angles(self.n_theta) {
                let (w, wr, wg) = (self.sample)(r, g + self.gamma_offset, th);
                m.norm2 += dot(&w, &w);
                m.w_wr += dot(&w, &wr);
                m.wr_wg += dot(&wr, &wg);
                m.wg_wg += dot(&wg, &wg);
            }
        }
        let s = 1.0 / (self.n_gamma * self.n_theta) as f64;
        Moments { norm2: m.norm2 * s, w_wr: m.w_wr * s, wr_wg: m.wr_wg * s, wg_wg: m.wg_wg * s }
    }
}

/// Quadrature of a series immersion on the grid `2 sigma + 1` by `4 ell + 1`,
/// scaled by `refine`.
pub fn series_quadrature(
    w: &PowerFourierMap,
    z_index: usize,
    conj_index: usize,
    refine: usize,
) -> QuadratureMoments<impl Fn(f64, f64, f64) -> ImmersionSample + '_> {
    let dz: Vec<Series> = w.comps.iter().map(|s| s.derivative(z_index)).collect();
    let dc: Vec<Series> = w.comps.iter().map(|s| s.derivative(conj_index)).collect();
    let sample = move |r: f64, g: f64, th: f64| {
        let e = C64::from_polar(1.0, g);
        let mut x = vec![C64::new(0.0, 0.0); 2];
        x[z_index] = e * r;
        x[conj_index] = e.conj() * r;
        let w0: Vec<C64> = w.comps.iter().map(|s| s.eval(&x, th)).collect();
        let a: Vec<C64> = dz.iter().map(|s| s.eval(&x, th)).collect();
        let b: Vec<C64> = dc.iter().map(|s| s.eval(&x, th)).collect();
        let wr = a.iter().zip(&b).map(|(a, b)| a * e + b * e.conj()).collect();
        let wg = a.iter().zip(&b).map(|(a, b)| C64::new(0.0, r) * (a * e - b * e.conj())).collect();
        (w0, wr, wg)
    };
    QuadratureMoments {
        sample,
        n_gamma: (2 * w.sigma + 1) * refine,
        n_theta: grid_size(w.ell) * refine,
        gamma_offset: 0.0,
    }
}

// Gauss–Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

const MONOTONE_SAMPLES: usize = 64;

/// Amplitude `kappa`, its inverse `rho` and the phase correction `phi`.
pub struct AmplitudeNormalization<'a> {
    source: Box<dyn MomentSource + 'a>,
    /// Subintervals per unit of `ln` amplitude in the `phi` quadrature.
    pub panels: usize,
}

impl<'a> AmplitudeNormalization<'a> {
    pub fn new(source: impl MomentSource + 'a) -> Self {
        AmplitudeNormalization { source: Box::new(source), panels: 4 }
    }

    pub fn from_series(w: &'a PowerFourierMap, z_index: usize, conj_index: usize) -> Self {
        Self::new(ParsevalMoments::new(w, z_index, conj_index))
    }

    pub fn kappa(&self, rho: f64) -> f64 {
        self.source.moments(rho).norm2.max(0.0).sqrt()
    }

    pub fn dkappa(&self, rho: f64) -> f64 {
        let m = self.source.moments(rho);
        if m.norm2 > 0.0 {
            m.w_wr / m.norm2.sqrt()
        } else {
            // kappa is linear at the origin
            self.source.moments(1e-8).w_wr / self.source.moments(1e-8).norm2.sqrt()
        }
    }

    /// Integrand of `phi`, `-<W_r, W_gamma> / <W_gamma, W_gamma>`.
    pub fn dphi(&self, r: f64) -> f64 {
        let m = self.source.moments(r);
        if m.wg_wg > 0.0 {
            -m.wr_wg / m.wg_wg
        } else {
            0.0
        }
    }

    /// `phi(b) - phi(a)` by composite Gauss–Legendre quadrature, with panels
    /// graded towards the origin.
    pub fn phi_between(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut edges = vec![hi];
        let floor = 1e-3 * hi;
        let mut x = hi;
        while x > lo.max(floor) {
            x = (x * 0.5).max(lo);
            edges.push(x);
        }
        if *edges.last().unwrap() > lo {
            edges.push(lo);
        }
        let mut total = 0.0;
        for pair in edges.windows(2) {
            let (b1, a1) = (pair[0], pair[1]);
            let h = (b1 - a1) / self.panels as f64;
            for s in 0..self.panels {
                let c = a1 + h * (s as f64 + 0.5);
                for (x, w) in GL_X.iter().zip(GL_W) {
                    total += w * 0.5 * h * (self.dphi(c + 0.5 * h * x) + self.dphi(c - 0.5 * h * x));
                }
            }
        }
        sign * total
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.phi_between(0.0, r)
    }

    /// Root of `kappa(rho) = r` by bisection polished with Newton steps.
    pub fn rho(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        let slope0 = self.dkappa(0.0);
        if !(slope0 > 0.0) {
            return Err(Error::NonMonotoneKappa(0.0));
        }
        let mut hi = r / slope0;
        let mut lo = 0.0;
        let mut guard = 0;
        while self.kappa(hi) < r {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 60 {
                return Err(Error::NonMonotoneKappa(hi));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.kappa(mid) < r {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-6 * hi {
                break;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..8 {
            let d = self.dkappa(x);
            if !(d > 0.0) {
                return Err(Error::NonMonotoneKappa(x));
            }
            let step = (self.kappa(x) - r) / d;
            let next = (x - step).clamp(lo, hi);
            if (next - x).abs() <= 1e-15 * x {
                x = next;
                break;
            }
            x = next;
        }
        // the root must lie on the first increasing branch
        for i in 1..=MONOTONE_SAMPLES {
            let y = x * i as f64 / MONOTONE_SAMPLES as f64;
            if !(self.dkappa(y) > 0.0) {
                return Err(Error::NonMonotoneKappa(y));
            }
        }
        Ok(x)
    }

    /// `(kappa, rho, phi)` sampled on an amplitude grid.
    pub fn sample(&self, r: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let kappa = r.iter().map(|&x| self.kappa(x)).collect();
        let rho = r.iter().map(|&x| self.rho(x)).collect::<Result<Vec<_>>>()?;
        let phi = r.iter().map(|&x| self.phi(x)).collect();
        Ok((kappa, rho, phi))
    }
}

/// `(R~(r), T~(r))` of a discrete polar form in the normalised amplitude.
pub fn corrected_dynamics(polar: &PolarForm, norm: &AmplitudeNormalization, r: f64) -> Result<(f64, f64)> {
    let rho = norm.rho(r)?;
    let rr = polar.radius(rho);
    let rt = norm.kappa(rr);
    // phi(rho) - phi(R(rho))
    let tt = polar.angle(rho) - norm.phi_between(rho, rr);
    Ok((rt, tt))
}

/// Frequency and damping ratio at amplitude `r` of a discrete form sampled
/// every `dt`.
pub fn map_backbone_point(polar: &PolarForm, norm: &AmplitudeNormalization, r: f64, dt: f64) -> Result<(f64, f64)> {
    let (rt, tt) = corrected_dynamics(polar, norm, r)?;
    Ok((tt / dt, -(rt / r).ln() / tt))
}

/// Frequency and damping ratio at amplitude `r` of a continuous form.
pub fn ode_backbone_point(polar: &PolarForm, norm: &AmplitudeNormalization, r: f64) -> Result<(f64, f64)> {
    let rho = norm.rho(r)?;
    let rc = polar.radial_rate(rho);
    let omega = polar.angular_rate(rho) - norm.dphi(rho) * rc;
    let zeta = -norm.dkappa(rho) * rc / (r * omega);
    Ok((omega, zeta))
}

/// `n` log-spaced amplitudes spanning `[r_min, r_max]`.
pub fn log_grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![r_max];
    }
    let (a, b) = (r_min.ln(), r_max.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub const DEFAULT_R_MIN: f64 = 1e-4;
pub const DEFAULT_R_POINTS: usize = 64;

/// Mean over a `(gamma, theta)` grid of
/// `|F(W(z, theta), theta) - W(R(z, theta), theta + omega)| / |W(z, theta)|`
/// at `|z| = rho`, and the mean of `|W|`. `gamma_offset` shifts the
/// sampling grid in `gamma`.
pub struct ErrorSampler {
    f: Vec<Vec<Jet<C64>>>,
    w: Vec<Vec<Jet<C64>>>,
    w_next: Vec<Vec<Jet<C64>>>,
    n_gamma: usize,
    z_index: usize,
    conj_index: usize,
}

impl ErrorSampler {
    pub fn new(f: &PowerFourierMap, w: &PowerFourierMap, omega: f64, z_index: usize, conj_index: usize) -> Self {
        let ell = f.ell.max(w.ell);
        let angles = grid_angles(grid_size(ell));
        ErrorSampler {
            f: angles.iter().map(|&th| f.at_theta(th)).collect(),
            w: angles.iter().map(|&th| w.at_theta(th)).collect(),
            w_next: angles.iter().map(|&th| w.at_theta(th + omega)).collect(),
            n_gamma: 2 * w.sigma + 1,
            z_index,
            conj_index,
        }
    }

    fn point(&self, z: C64) -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); 2];
        x[self.z_index] = z;
        x[self.conj_index] = z.conj();
        x
    }

    /// `(E_rel, amplitude)` at reduced amplitude `rho`; `step` advances `z`.
    pub fn at(&self, rho: f64, gamma_offset: f64, step: &dyn Fn(C64, usize) -> C64) -> (f64, f64) {
        let mut err = 0.0;
        let mut amp = 0.0;
        let mut count = 0usize;
        for g in grid_angles(self.n_gamma) {
            let z = C64::from_polar(rho, g + gamma_offset);
            let x = self.point(z);
            for q in 0..self.f.len() {
                let wz: Vec<C64> = self.w[q].iter().map(|j| j.eval(&x)).collect();
                let nw = wz.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if nw < 1e-14 {
                    continue;
                }
                let lhs: Vec<C64> = self.f[q].iter().map(|j| j.eval(&wz)).collect();
                let xn = self.point(step(z, q));
                let rhs = self.w_next[q].iter().map(|j| j.eval(&xn));
                let d = lhs.iter().zip(rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                err += d / nw;
                amp += nw;
                count += 1;
            }
        }
        if count == 0 {
            return (0.0, 0.0);
        }
        (err / count as f64, amp / count as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackboneCurves {
    pub r_grid: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub omega: Vec<f64>,
    pub zeta: Vec<f64>,
    pub e_rel: Vec<f64>,
    pub source: String,
}

impl BackboneCurves {
    pub fn len(&self) -> usize {
        self.r_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_grid.is_empty()
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "r,amplitude,omega,zeta,e_rel,source")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{}",
                self.r_grid[i], self.amplitude[i], self.omega[i], self.zeta[i], self.e_rel[i], self.source
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut c = BackboneCurves {
            r_grid: vec![],
            amplitude: vec![],
            omega: vec![],
            zeta: vec![],
            e_rel: vec![],
            source: String::new(),
        };
        for (n, line) in text.lines().enumerate().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Config(format!("{}: line {} has {} fields", path.display(), n + 1, f.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: line {}: {e}", path.display(), n + 1)))
            };
            c.r_grid.push(num(f[0])?);
            c.amplitude.push(num(f[1])?);
            c.omega.push(num(f[2])?);
            c.zeta.push(num(f[3])?);
            c.e_rel.push(num(f[4])?);
            c.source = f[5].to_string();
        }
        Ok(c)
    }
}

/// What the backbone computation needs besides the manifold.
pub struct BackboneInputs<'a> {
    /// Immersion in state coordinates about the torus.
    pub w_phys: &'a PowerFourierMap,
    /// Map about the torus in state coordinates, for `E_rel`.
    pub f_phys: &'a PowerFourierMap,
    /// Torus rotation per sampling period.
    pub omega: f64,
    pub dt: f64,
    /// RK4 substeps for advancing continuous reduced dynamics.
    pub steps: usize,
}

/// Backbone curves of a two-dimensional manifold on the physical amplitude grid `r_grid`.
pub fn backbone(m: &ManifoldModel, inp: &BackboneInputs, r_grid: &[f64]) -> Result<BackboneCurves> {
    let polar = to_polar(&m.r, m.continuous)?;
    let norm = AmplitudeNormalization::from_series(inp.w_phys, polar.z_index, polar.conj_index);
    let sampler = ErrorSampler::new(inp.f_phys, inp.w_phys, inp.omega, polar.z_index, polar.conj_index);
    let step = |z: C64, _q: usize| polar.step(z, inp.dt, inp.steps);
    let mut out = BackboneCurves {
        r_grid: r_grid.to_vec(),
        amplitude: Vec::with_capacity(r_grid.len()),
        omega: Vec::with_capacity(r_grid.len()),
        zeta: Vec::with_capacity(r_grid.len()),
        e_rel: Vec::with_capacity(r_grid.len()),
        source: m.method.as_str().to_string(),
    };
    for &r in r_grid {
        let (om, ze) = if m.continuous {
            ode_backbone_point(&polar, &norm, r)?
        } else {
            map_backbone_point(&polar, &norm, r, inp.dt)?
        };
        let (e, a) = sampler.at(norm.rho(r)?, 0.0, &step);
        out.omega.push(om);
        out.zeta.push(ze);
        out.e_rel.push(e);
        out.amplitude.push(a);
    }
    Ok(out)
}

/// Same as [`backbone`] but with `E_rel` sampled on a `gamma` grid shifted by `offset`.
pub fn relative_error(
    m: &ManifoldModel,
    inp: &BackboneInputs,
    r_grid: &[f64],
    offset: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let polar = to_polar(&m.r, m.continuous)?;
    let norm = AmplitudeNormalization::from_series(inp.w_phys, polar.z_index, polar.conj_index);
    let sampler = ErrorSampler::new(inp.f_phys, inp.w_phys, inp.omega, polar.z_index, polar.conj_index);
    let step = |z: C64, _q: usize| polar.step(z, inp.dt, inp.steps);
    let mut e = Vec::new();
    let mut a = Vec::new();
    for &r in r_grid {
        let (x, y) = sampler.at(norm.rho(r)?, offset, &step);
        e.push(x);
        a.push(y);
    }
    Ok((e, a))
}

/// Method tag stored in CSV files.
pub fn parse_method(s: &str) -> Option<Method> {
    match s {
        "foil" => Some(Method::Foil),
        "map" => Some(Method::Map),
        "ode" => Some(Method::Ode),
        _ => None,
    }
}
