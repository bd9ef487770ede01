//! Benchmark vector fields and their Taylor-expanded stroboscopic maps.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::polyalg::{
    grid_angles, grid_size, Elementary, Jet, PowerFourierMap, Scalar, Series, TruncatedAlgebra, C64,
};
use crate::torus::TorusEmbedding;

/// Which trigonometric function drives the first coordinate of the planar
/// oscillator. The figure caption and the printed equations of motion
/// disagree; `Cosine` follows the caption.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseForcing {
    Cosine,
    Sine,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    OneMass {
        k1: f64,
        k2: f64,
        c1: f64,
        c2: f64,
        forcing: PhaseForcing,
    },
    TwoMass {
        k1: f64,
        k3: f64,
        k4: f64,
        d1: f64,
        d2: f64,
    },
    Linear2d {
        omega0: f64,
        zeta: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldModel {
    pub name: String,
    pub kind: ModelKind,
    pub amplitude: f64,
    pub omega_f: f64,
}

/// Stiffness of the spring between the planar oscillator's mass and the
/// second anchor. Chosen so the unforced linearisation has frequencies
/// `1` and `sqrt(2.5) = 1.581`.
pub const ONEMASS_K2: f64 = 2.5;

pub fn builtin_model(name: &str, amplitude: f64, omega_f: f64) -> Result<VectorFieldModel> {
    let kind = match name {
        "onemass" => ModelKind::OneMass {
            k1: 1.0,
            k2: ONEMASS_K2,
            c1: 0.06,
            c2: 0.12,
            forcing: PhaseForcing::Cosine,
        },
        "twomass" => ModelKind::TwoMass {
            k1: 1.0,
            k3: 0.02,
            k4: 0.02,
            d1: 0.03,
            d2: 0.04,
        },
        "linear2d" => ModelKind::Linear2d {
            omega0: 1.0,
            zeta: 0.05,
        },
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(VectorFieldModel {
        name: name.to_string(),
        kind,
        amplitude,
        omega_f,
    })
}

impl VectorFieldModel {
    pub fn linear2d(omega0: f64, zeta: f64, amplitude: f64, omega_f: f64) -> Self {
        VectorFieldModel {
            name: "linear2d".into(),
            kind: ModelKind::Linear2d { omega0, zeta },
            amplitude,
            omega_f,
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ModelKind::Linear2d { .. } => 2,
            _ => 4,
        }
    }

    /// Whether the right-hand side depends on time.
    pub fn is_forced(&self) -> bool {
        self.amplitude != 0.0 && self.omega_f != 0.0
    }

    /// Right-hand side `f(x, t)`, written once for numbers, jets and series.
    pub fn rhs<A: TruncatedAlgebra>(&self, x: &[A], t: f64) -> Result<Vec<A>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "model {} has {} states, got {}",
                self.name,
                self.dim(),
                x.len()
            )));
        }
        let a = self.amplitude;
        let wt = self.omega_f * t;
        match self.kind {
            ModelKind::OneMass {
                k1,
                k2,
                c1,
                c2,
                forcing,
            } => {
                let (x1, x2, v1, v2) = (&x[0], &x[1], &x[2], &x[3]);
                let p = x1.offset(1.0);
                let q = x2.offset(1.0);
                let r1sq = p.square().add(&x2.square());
                let r2sq = x1.square().add(&q.square());
                let inv_r1sq = r1sq.apply(Elementary::Recip)?;
                let inv_r2sq = r2sq.apply(Elementary::Recip)?;
                let inv_r1 = r1sq.apply(Elementary::Pow(-0.5))?;
                let inv_r2 = r2sq.apply(Elementary::Pow(-0.5))?;
                // 1 - 1/|r|
                let e1 = inv_r1.scale(-1.0).offset(1.0);
                let e2 = inv_r2.scale(-1.0).offset(1.0);
                let d1 = v1.mul(&p).add(&v2.mul(x2)).mul(&inv_r1sq);
                let d2 = v1.mul(x1).add(&v2.mul(&q)).mul(&inv_r2sq);
                let f1 = match forcing {
                    PhaseForcing::Cosine => a * (wt + PI / 3.0).cos(),
                    PhaseForcing::Sine => a * (wt + PI / 3.0).sin(),
                };
                let f2 = a * wt.cos();
                let dv1 = p
                    .mul(&d1.scale(-c1).sub(&e1.scale(k1)))
                    .sub(&x1.mul(&d2.scale(c2).add(&e2.scale(k2))))
                    .offset(f1);
                let dv2 = x2
                    .mul(&d1.scale(-c1).sub(&e1.scale(k1)))
                    .sub(&q.mul(&d2.scale(c2).add(&e2.scale(k2))))
                    .offset(f2);
                Ok(vec![v1.clone(), v2.clone(), dv1, dv2])
            }
            ModelKind::TwoMass { k1, k3, k4, d1, d2 } => {
                let (x1, x2, v1, v2) = (&x[0], &x[1], &x[2], &x[3]);
                let k2 = 3f64.sqrt() - a / 2.0 * wt.sin().powi(2) - a / 4.0 * wt.sin();
                let d = x1.sub(x2);
                let dv = v2.sub(v1);
                let spring = d.square().mul(&d).scale(2.0 * k4).add(&d.scale(k2));
                let dv1 = v1
                    .scale(-d1)
                    .add(&dv.scale(d2))
                    .sub(&spring)
                    .sub(&x1.square().mul(x1).scale(2.0 * k3))
                    .sub(&x1.scale(k1))
                    .offset(a * wt.cos());
                let dv2 = dv.scale(-d2).add(&spring).offset(a * wt.sin());
                Ok(vec![v1.clone(), v2.clone(), dv1, dv2])
            }
            ModelKind::Linear2d { omega0, zeta } => {
                let (x1, v1) = (&x[0], &x[1]);
                let dv = x1
                    .scale(-omega0 * omega0)
                    .sub(&v1.scale(2.0 * zeta * omega0))
                    .offset(a * wt.cos());
                Ok(vec![v1.clone(), dv])
            }
        }
    }

    /// Jacobian of the right-hand side at `(x, t)`.
    pub fn jacobian(&self, x: &[f64], t: f64) -> Result<nalgebra::DMatrix<f64>> {
        let n = self.dim();
        let jets: Vec<Jet<f64>> = (0..n).map(|i| Jet::variable(n, 1, i, x[i])).collect();
        let f = self.rhs(&jets, t)?;
        Ok(nalgebra::DMatrix::from_fn(n, n, |i, j| f[i].coeffs()[1 + j]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StroboscopicMapSpec {
    pub dt: f64,
    pub steps: usize,
    pub sigma: usize,
    pub ell: usize,
}

/// Substeps per sampling period used unless configured otherwise.
pub const DEFAULT_STEPS: usize = 64;
pub const DEFAULT_DT: f64 = 0.8;

impl StroboscopicMapSpec {
    pub fn new(sigma: usize, ell: usize) -> Self {
        StroboscopicMapSpec {
            dt: DEFAULT_DT,
            steps: DEFAULT_STEPS,
            sigma,
            ell,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.steps == 0 {
            return Err(Error::Config(format!(
                "sampling period {} and substeps {} must be positive",
                self.dt, self.steps
            )));
        }
        Ok(())
    }
}

/// Rotation of the forcing phase over one sampling period.
pub fn map_rotation(omega_f: f64, dt: f64) -> f64 {
    (omega_f * dt).rem_euclid(2.0 * PI)
}

/// Time at which the forcing phase equals `theta`.
pub fn phase_time(omega_f: f64, theta: f64) -> f64 {
    if omega_f == 0.0 {
        0.0
    } else {
        theta / omega_f
    }
}

fn rk4_step<A: TruncatedAlgebra>(model: &VectorFieldModel, y: &[A], t: f64, h: f64) -> Result<Vec<A>> {
    let shifted = |base: &[A], k: &[A], c: f64| -> Vec<A> {
        base.iter().zip(k).map(|(b, k)| b.add(&k.scale(c))).collect()
    };
    let k1 = model.rhs(y, t)?;
    let k2 = model.rhs(&shifted(y, &k1, h / 2.0), t + h / 2.0)?;
    let k3 = model.rhs(&shifted(y, &k2, h / 2.0), t + h / 2.0)?;
    let k4 = model.rhs(&shifted(y, &k3, h), t + h)?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let incr = k1[i]
                .add(&k2[i].scale(2.0))
                .add(&k3[i].scale(2.0))
                .add(&k4[i]);
            yi.add(&incr.scale(h / 6.0))
        })
        .collect())
}

/// RK4 flow over `dt` with `steps` substeps, in any truncated algebra.
pub fn flow<A: TruncatedAlgebra>(
    model: &VectorFieldModel,
    y0: Vec<A>,
    t0: f64,
    dt: f64,
    steps: usize,
) -> Result<Vec<A>> {
    let h = dt / steps as f64;
    let mut y = y0;
    for s in 0..steps {
        y = rk4_step(model, &y, t0 + s as f64 * h, h)?;
    }
    Ok(y)
}

/// Taylor–Fourier expansion of the time-`dt` map started at `center(theta) + x`
/// at forcing phase `theta`. The output is the absolute end state.
pub fn stroboscopic_map(
    model: &VectorFieldModel,
    spec: &StroboscopicMapSpec,
    center: Option<&TorusEmbedding>,
) -> Result<PowerFourierMap> {
    spec.validate()?;
    let n = model.dim();
    if let Some(k) = center {
        if k.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "torus has {} coordinates, model {}",
                k.dim(),
                n
            )));
        }
    }
    let m = grid_size(spec.ell);
    let angles = grid_angles(m);
    let mut samples: Vec<Vec<Jet<C64>>> = vec![Vec::with_capacity(m); n];
    for &th in &angles {
        let base = center.map(|k| k.eval_real(th)).unwrap_or_else(|| vec![0.0; n]);
        let y0: Vec<Jet<f64>> = (0..n).map(|i| Jet::variable(n, spec.sigma, i, base[i])).collect();
        let t0 = phase_time(model.omega_f, th);
        let y = flow(model, y0, t0, spec.dt, spec.steps)?;
        for (i, yi) in y.into_iter().enumerate() {
            let c = yi.coeffs().iter().map(|v| v.to_c64()).collect();
            samples[i].push(Jet::from_coeffs(yi.monomials().clone(), c));
        }
    }
    let comps = samples.iter().map(|s| Series::from_grid(s, spec.ell)).collect();
    let mut f = PowerFourierMap {
        n_in: n,
        n_out: n,
        sigma: spec.sigma,
        ell: spec.ell,
        omega_f: map_rotation(model.omega_f, spec.dt),
        conj: Some(crate::polyalg::Conjugation::real(n, n)),
        comps,
    };
    f.symmetrize();
    Ok(f)
}

/// The vector field in coordinates attached to a torus of the flow,
/// `f(K(theta) + x, theta / omega_f) - omega_f K'(theta)`, expanded to `(sigma, ell)`.
/// With the torus invariant under the flow the constant part vanishes.
pub fn vector_field_about(
    model: &VectorFieldModel,
    torus: Option<&TorusEmbedding>,
    sigma: usize,
    ell: usize,
) -> Result<PowerFourierMap> {
    let n = model.dim();
    let m = grid_size(ell);
    let mut samples: Vec<Vec<Jet<C64>>> = vec![Vec::with_capacity(m); n];
    for th in grid_angles(m) {
        let (base, dbase) = match torus {
            Some(k) => (k.eval_real(th), k.derivative().eval_real(th)),
            None => (vec![0.0; n], vec![0.0; n]),
        };
        let x: Vec<Jet<f64>> = (0..n).map(|i| Jet::variable(n, sigma, i, base[i])).collect();
        let f = model.rhs(&x, phase_time(model.omega_f, th))?;
        for (i, fi) in f.into_iter().enumerate() {
            let fi = fi.offset(-model.omega_f * dbase[i]);
            let c = fi.coeffs().iter().map(|v| v.to_c64()).collect();
            samples[i].push(Jet::from_coeffs(fi.monomials().clone(), c));
        }
    }
    let comps = samples.iter().map(|s| Series::from_grid(s, ell)).collect();
    let mut f = PowerFourierMap {
        n_in: n,
        n_out: n,
        sigma,
        ell,
        omega_f: model.omega_f,
        conj: Some(crate::polyalg::Conjugation::real(n, n)),
        comps,
    };
    f.symmetrize();
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn frequencies(a: &DMatrix<f64>) -> Vec<(f64, f64)> {
        let ev = a.clone().complex_eigenvalues();
        let mut out: Vec<(f64, f64)> = ev
            .iter()
            .filter(|l| l.im > 0.0)
            .map(|l| (l.norm(), -l.re / l.norm()))
            .collect();
        out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        out
    }

    #[test]
    fn unforced_equilibria() {
        for name in ["onemass", "twomass", "linear2d"] {
            let m = builtin_model(name, 0.0, 1.0).unwrap();
            let f = m.rhs(&vec![0.0; m.dim()], 0.37).unwrap();
            assert!(f.iter().all(|v| v.abs() < 1e-15), "{name}");
        }
    }

    #[test]
    fn onemass_linear_frequencies() {
        let m = builtin_model("onemass", 0.0, 1.2).unwrap();
        let w = frequencies(&m.jacobian(&[0.0; 4], 0.0).unwrap());
        assert!((w[0].0 - 1.0).abs() < 5e-3);
        assert!((w[1].0 - 1.58).abs() < 5e-3);
    }

    #[test]
    fn twomass_linear_frequencies_and_damping() {
        let m = builtin_model("twomass", 0.0, 0.76).unwrap();
        let w = frequencies(&m.jacobian(&[0.0; 4], 0.0).unwrap());
        assert!((w[0].0 - 0.6551).abs() < 5e-4);
        assert!((w[1].0 - 2.008).abs() < 1e-3);
        assert!((w[0].1 - 0.0095).abs() < 5e-4);
        assert!((w[1].1 - 0.0243).abs() < 5e-4);
    }

    #[test]
    fn linear2d_continuous_eigenvalues() {
        let m = VectorFieldModel::linear2d(1.0, 0.05, 0.0, 1.0);
        let ev = m.jacobian(&[0.0, 0.0], 0.0).unwrap().complex_eigenvalues();
        let wd = (1.0f64 - 0.05 * 0.05).sqrt();
        assert!(ev.iter().any(|l| (l - C64::new(-0.05, wd)).norm() < 1e-12));
    }

    #[test]
    fn unknown_model_rejected() {
        assert!(matches!(builtin_model("pendulum", 0.0, 1.0), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn unforced_map_fixes_origin() {
        let m = builtin_model("onemass", 0.0, 1.2).unwrap();
        let spec = StroboscopicMapSpec { dt: 0.8, steps: 8, sigma: 2, ell: 1 };
        let f = stroboscopic_map(&m, &spec, None).unwrap();
        for th in [0.0, 1.0, 4.0] {
            let y = f.evaluate_real(&[0.0; 4], th).unwrap();
            assert!(y.iter().all(|v| v.norm() < 1e-14));
        }
    }

    #[test]
    fn jet_rhs_matches_pointwise_rhs() {
        let m = builtin_model("onemass", 0.03, 1.2).unwrap();
        let x0 = [0.02, -0.03, 0.01, 0.05];
        let t = 0.7;
        let jets: Vec<Jet<f64>> = (0..4).map(|i| Jet::variable(4, 3, i, x0[i])).collect();
        let fj = m.rhs(&jets, t).unwrap();
        let f0 = m.rhs(&x0, t).unwrap();
        let h = 1e-6;
        for j in 0..4 {
            let mut xp = x0;
            let mut xm = x0;
            xp[j] += h;
            xm[j] -= h;
            let fp = m.rhs(&xp, t).unwrap();
            let fm = m.rhs(&xm, t).unwrap();
            for i in 0..4 {
                assert!((fj[i].coeffs()[0] - f0[i]).abs() < 1e-14);
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fj[i].coeffs()[1 + j] - fd).abs() < 1e-8);
            }
        }
    }
}
