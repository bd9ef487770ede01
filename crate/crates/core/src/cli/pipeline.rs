use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::PipelineConfig;
use crate::bundles::{decompose, diagonalize_map_with_defect, spectral_quotient, DichotomyDecomposition, LinearBundleProblem, ResonanceHit};
use crate::error::{Error, Result};
use crate::foliation::{complementary_foliation, invariance_defect, solve_foliation, FoliationModel, SolveOptions};
use crate::manifold::{
    diagonalize_vector_field, map_invariance_defect, reconstruct, reconstruction_defect, solve_manifold_map,
    solve_manifold_vector_field, vector_field_invariance_defect, ManifoldModel, Method,
};
use crate::odemap::{stroboscopic_map, vector_field_about, VectorFieldModel};
use crate::polyalg::{grid_angles, grid_size, PowerFourierMap, C64};
use crate::rom::{backbone, log_grid, to_polar, AmplitudeNormalization, BackboneCurves, BackboneInputs};
use crate::torus::{solve_flow_torus, subtract_image, TorusEmbedding, TorusSolution};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// How far a run goes; every stage includes the ones before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Torus,
    Spectrum,
    Foliate,
    Manifold,
    Rom,
}

pub struct TorusStage {
    pub torus: TorusEmbedding,
    pub solution: Option<TorusSolution>,
    /// Map about the torus in state coordinates.
    pub map: PowerFourierMap,
}

pub struct SpectrumStage {
    pub dec: DichotomyDecomposition,
    /// Map in the bundle frame with `Lambda` imposed.
    pub fd: PowerFourierMap,
    pub linear_defect: f64,
    pub clusters: Vec<usize>,
    pub coords: Vec<usize>,
    pub complement: Vec<usize>,
}

pub struct FoliationStage {
    pub u: FoliationModel,
    pub v: FoliationModel,
}

pub struct ManifoldStage {
    pub foil: ManifoldModel,
    pub map: ManifoldModel,
    pub ode: ManifoldModel,
    /// Vector field in the bundle frame.
    pub field: PowerFourierMap,
    pub field_linear_defect: f64,
}

/// Everything computed by one run, up to the requested stage.
pub struct PipelineRun {
    pub config: PipelineConfig,
    pub model: VectorFieldModel,
    pub torus: TorusStage,
    pub spectrum: Option<SpectrumStage>,
    pub foliation: Option<FoliationStage>,
    pub manifolds: Option<ManifoldStage>,
    pub backbones: Vec<BackboneCurves>,
    pub warnings: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

fn timed<T>(timings: &mut BTreeMap<String, f64>, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t0 = Instant::now();
    let out = f();
    timings.insert(name.to_string(), t0.elapsed().as_secs_f64() * 1e3);
    out
}

fn torus_stage(cfg: &PipelineConfig, model: &VectorFieldModel) -> Result<TorusStage> {
    let spec = cfg.map_spec();
    spec.validate()?;
    if spec.ell == 0 {
        let map = stroboscopic_map(model, &spec, None)?;
        return Ok(TorusStage { torus: TorusEmbedding::zero(model.dim(), 0), solution: None, map });
    }
    let linear = crate::odemap::StroboscopicMapSpec { sigma: 1, ..spec };
    let sol = solve_flow_torus(model, &linear, cfg.torus_tol, cfg.torus_max_iter)?;
    let raw = stroboscopic_map(model, &spec, Some(&sol.torus))?;
    let map = subtract_image(raw, &sol.torus, (100.0 * cfg.torus_tol).max(1e-9))?;
    Ok(TorusStage { torus: sol.torus.clone(), solution: Some(sol), map })
}

fn selected_clusters(cfg: &PipelineConfig, dec: &DichotomyDecomposition) -> Result<Vec<usize>> {
    if let Some(c) = &cfg.clusters {
        if let Some(bad) = c.iter().find(|&&i| i >= dec.clusters.len()) {
            return Err(Error::Config(format!("cluster {bad} does not exist; the spectrum has {}", dec.clusters.len())));
        }
        let mut c = c.clone();
        c.sort_unstable();
        c.dedup();
        return Ok(c);
    }
    let n = cfg.mode.unwrap_or(1);
    dec.mode(n, cfg.dt)
        .map(|c| vec![c])
        .ok_or_else(|| Error::Config(format!("mode {n} does not exist in the spectrum")))
}

fn spectrum_stage(cfg: &PipelineConfig, map: &PowerFourierMap, warnings: &mut Vec<String>) -> Result<SpectrumStage> {
    let dec = decompose(&LinearBundleProblem::from_map(map))?;
    let (fd, linear_defect) = diagonalize_map_with_defect(map, &dec)?;
    if linear_defect > 1e-6 {
        warnings.push(format!(
            "bundle frame leaves a linear-part deviation of {linear_defect:.3e}; Lambda was imposed"
        ));
    }
    let clusters = selected_clusters(cfg, &dec)?;
    let coords = dec.coords_of(&clusters);
    let complement = dec.complement(&clusters);
    for (name, set) in [("index set", &clusters), ("complement", &complement)] {
        if set.is_empty() {
            continue;
        }
        if let Ok(q) = spectral_quotient(&dec, set) {
            if cfg.sigma as f64 > q + 1.0 {
                warnings.push(format!(
                    "sigma = {} exceeds the spectral quotient of the {name} plus one ({:.3}); terms above that order are not unique",
                    cfg.sigma,
                    q + 1.0
                ));
            }
        }
    }
    Ok(SpectrumStage { dec, fd, linear_defect, clusters, coords, complement })
}

fn manifold_stage(
    cfg: &PipelineConfig,
    model: &VectorFieldModel,
    torus: &TorusEmbedding,
    sp: &SpectrumStage,
    fol: &FoliationStage,
    opts: &SolveOptions,
) -> Result<ManifoldStage> {
    let foil = reconstruct(&fol.u, &fol.v).map_err(|e| e.in_stage("reconstruct"))?;
    let branches = std::thread::scope(|s| {
        let map = s.spawn(|| solve_manifold_map(&sp.fd, sp.dec.omega, &sp.coords, opts));
        let ode = s.spawn(|| -> Result<_> {
            let ell = cfg.effective_ell().max(sp.dec.ell);
            let fc = vector_field_about(model, (ell > 0).then_some(torus), cfg.sigma, ell)?;
            let (field, defect) = diagonalize_vector_field(&fc, &sp.dec, cfg.dt)?;
            let copts = SolveOptions {
                delta_int: opts.delta_int / cfg.dt,
                delta_ext: opts.delta_ext / cfg.dt,
                ..opts.clone()
            };
            let m = solve_manifold_vector_field(&field, &sp.coords, &copts)?;
            Ok((m, field, defect))
        });
        (map.join().expect("map branch"), ode.join().expect("ode branch"))
    });
    let map = branches.0.map_err(|e| e.in_stage("manifold-map"))?;
    let (ode, field, field_linear_defect) = branches.1.map_err(|e| e.in_stage("manifold-ode"))?;
    Ok(ManifoldStage { foil, map, ode, field, field_linear_defect })
}

impl PipelineRun {
    pub fn execute(config: &PipelineConfig, until: Stage) -> Result<Self> {
        config.validate()?;
        let model = config.vector_field()?;
        let mut timings = BTreeMap::new();
        let mut warnings = Vec::new();
        let torus = timed(&mut timings, "torus", || torus_stage(config, &model)).map_err(|e| e.in_stage("torus"))?;
        let mut run = PipelineRun {
            config: config.clone(),
            model,
            torus,
            spectrum: None,
            foliation: None,
            manifolds: None,
            backbones: Vec::new(),
            warnings: Vec::new(),
            timings_ms: BTreeMap::new(),
        };
        if until >= Stage::Spectrum {
            let sp = timed(&mut timings, "spectrum", || spectrum_stage(config, &run.torus.map, &mut warnings))
                .map_err(|e| e.in_stage("spectrum"))?;
            run.spectrum = Some(sp);
        }
        let opts = config.solve_options();
        if until >= Stage::Foliate {
            let sp = run.spectrum.as_ref().unwrap();
            let fol = timed(&mut timings, "foliation", || {
                let u = solve_foliation(&sp.fd, sp.dec.omega, &sp.coords, &opts)?;
                let v = complementary_foliation(&sp.fd, sp.dec.omega, &sp.coords, &opts)?;
                Ok(FoliationStage { u, v })
            })
            .map_err(|e| e.in_stage("foliation"))?;
            run.foliation = Some(fol);
        }
        if until >= Stage::Manifold {
            let sp = run.spectrum.as_ref().unwrap();
            let fol = run.foliation.as_ref().unwrap();
            let ms = timed(&mut timings, "manifold", || {
                manifold_stage(config, &run.model, &run.torus.torus, sp, fol, &opts)
            })?;
            run.manifolds = Some(ms);
        }
        if until >= Stage::Rom {
            let sp = run.spectrum.as_ref().unwrap();
            let ms = run.manifolds.as_ref().unwrap();
            let grid = log_grid(config.r_min, config.r_max, config.r_points);
            let f_phys = &run.torus.map;
            let curves = timed(&mut timings, "rom", || {
                std::thread::scope(|s| {
                    let handles: Vec<_> = [&ms.foil, &ms.map, &ms.ode]
                        .into_iter()
                        .map(|m| {
                            let grid = &grid;
                            let dec = &sp.dec;
                            s.spawn(move || {
                                let wp = m.physical(dec);
                                let inp = BackboneInputs {
                                    w_phys: &wp,
                                    f_phys,
                                    omega: dec.omega,
                                    dt: config.dt,
                                    steps: config.steps,
                                };
                                backbone(m, &inp, grid)
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("rom branch")).collect::<Result<Vec<_>>>()
                })
            })
            .map_err(|e| e.in_stage("rom"))?;
            run.backbones = curves;
        }
        run.warnings = warnings;
        run.timings_ms = timings;
        Ok(run)
    }

    pub fn backbone(&self, method: Method) -> Option<&BackboneCurves> {
        self.backbones.iter().find(|b| b.source == method.as_str())
    }

    /// Spectral quotient of each cluster.
    pub fn quotients(&self) -> Vec<Option<f64>> {
        let Some(sp) = &self.spectrum else { return vec![] };
        (0..sp.dec.clusters.len()).map(|c| spectral_quotient(&sp.dec, &[c]).ok()).collect()
    }

    pub fn report(&self) -> Report {
        let cfg = &self.config;
        let sp = self.spectrum.as_ref();
        let quotients = self.quotients();
        let mut residuals = Residuals {
            torus: self.torus.solution.as_ref().map_or(0.0, |s| s.residual),
            torus_fine: self.torus.solution.as_ref().map_or(0.0, |s| s.fine_residual),
            ..Default::default()
        };
        let mut spectrum = None;
        let mut selection = None;
        if let Some(sp) = sp {
            residuals.frame = Some(sp.dec.frame_defect);
            residuals.frame_left_invariance = Some(sp.dec.left_invariance);
            residuals.frame_right_invariance = Some(sp.dec.right_invariance);
            residuals.map_linear_part = Some(sp.linear_defect);
            spectrum = Some(
                sp.dec
                    .clusters
                    .iter()
                    .enumerate()
                    .map(|(i, c)| ClusterReport {
                        index: i,
                        alpha: c.alpha,
                        beta: c.beta,
                        lambda: [c.lambda.re, c.lambda.im],
                        is_pair: c.is_pair,
                        frequency: c.lambda.arg().abs() / cfg.dt,
                        damping_ratio: damping_of(c.lambda),
                        quotient: quotients[i],
                        members: c.members.len(),
                    })
                    .collect(),
            );
            selection = Some(Selection {
                clusters: sp.clusters.clone(),
                coords: sp.coords.clone(),
                complement: sp.complement.clone(),
                quotient: spectral_quotient(&sp.dec, &sp.clusters).ok(),
                complement_quotient: if sp.complement.is_empty() {
                    None
                } else {
                    spectral_quotient(&sp.dec, &sp.complement).ok()
                },
            });
        }
        let mut resonances = BTreeMap::new();
        if let (Some(sp), Some(f)) = (sp, &self.foliation) {
            residuals.foliation_u = invariance_defect(&f.u, &sp.fd, sp.dec.omega).ok();
            residuals.foliation_v = invariance_defect(&f.v, &sp.fd, sp.dec.omega).ok();
            resonances.insert("foliation_u".to_string(), f.u.resonant_terms.clone());
            resonances.insert("foliation_v".to_string(), f.v.resonant_terms.clone());
        }
        if let (Some(sp), Some(f), Some(m)) = (sp, &self.foliation, &self.manifolds) {
            residuals.reconstruction = reconstruction_defect(&f.u, &f.v, &m.foil).ok();
            residuals.manifold_foil_map_invariance = map_invariance_defect(&m.foil, &sp.fd, sp.dec.omega).ok();
            residuals.manifold_map = map_invariance_defect(&m.map, &sp.fd, sp.dec.omega).ok();
            residuals.manifold_ode = vector_field_invariance_defect(&m.ode, &m.field).ok();
            residuals.field_linear_part = Some(m.field_linear_defect);
            resonances.insert("manifold_map".to_string(), m.map.resonant_terms.clone());
            resonances.insert("manifold_ode".to_string(), m.ode.resonant_terms.clone());
        }
        let backbones = self
            .backbones
            .iter()
            .map(|b| {
                (
                    b.source.clone(),
                    BackboneSummary {
                        file: format!("backbone_{}.csv", b.source),
                        omega0: b.omega[0],
                        zeta0: b.zeta[0],
                        e_rel_min_amplitude: b.e_rel[0],
                        e_rel_max: b.e_rel.iter().cloned().fold(0.0, f64::max),
                        valid_up_to: b
                            .r_grid
                            .iter()
                            .zip(&b.e_rel)
                            .take_while(|(_, e)| **e < 1e-4)
                            .last()
                            .map(|(r, _)| *r),
                    },
                )
            })
            .collect();
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            model: ModelReport {
                name: self.model.name.clone(),
                amplitude: self.model.amplitude,
                omega_f: self.model.omega_f,
                dim: self.model.dim(),
            },
            config: cfg.clone(),
            effective_ell: cfg.effective_ell(),
            rotation: sp.map(|s| s.dec.omega),
            torus: TorusReport {
                max_abs: self.torus.torus.max_abs(),
                iterations: self.torus.solution.as_ref().map(|s| s.iterations),
                kantorovich: self.torus.solution.as_ref().and_then(|s| s.kantorovich),
            },
            spectrum,
            selection,
            resonances,
            residuals,
            backbones,
            warnings: self.warnings.clone(),
            timings_ms: self.timings_ms.clone(),
        }
    }

    /// Writes the artifacts of every stage reached into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut f = fs::File::create(dir.join("torus.csv"))?;
        let n = self.model.dim();
        write!(f, "theta")?;
        for i in 0..n {
            write!(f, ",x{i}")?;
        }
        writeln!(f)?;
        for row in self.torus.torus.sample(self.config.torus_points) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        if let Some(sp) = &self.spectrum {
            let mut f = fs::File::create(dir.join("spectrum.csv"))?;
            writeln!(f, "index,re,im,abs,arg,cluster")?;
            let mut owner = vec![usize::MAX; sp.dec.eigenvalues.len()];
            for (c, cl) in sp.dec.clusters.iter().enumerate() {
                for &m in &cl.members {
                    owner[m] = c;
                }
            }
            for (i, l) in sp.dec.eigenvalues.iter().enumerate() {
                writeln!(f, "{i},{:e},{:e},{:e},{:e},{}", l.re, l.im, l.norm(), l.arg(), owner[i])?;
            }
        }
        if let Some(fol) = &self.foliation {
            fs::write(dir.join("foliation_u.json"), fol.u.u.to_json()?)?;
            fs::write(dir.join("foliation_r.json"), fol.u.r.to_json()?)?;
            fs::write(dir.join("foliation_v.json"), fol.v.u.to_json()?)?;
        }
        if let (Some(sp), Some(ms)) = (&self.spectrum, &self.manifolds) {
            for m in [&ms.foil, &ms.map, &ms.ode] {
                let tag = m.method.as_str();
                fs::write(dir.join(format!("manifold_{tag}.json")), m.w.to_json()?)?;
                fs::write(dir.join(format!("reduced_{tag}.json")), m.r.to_json()?)?;
                self.write_surface(&dir.join(format!("manifold_{tag}.csv")), m, &sp.dec)?;
            }
        }
        for b in &self.backbones {
            b.save_csv(&dir.join(format!("backbone_{}.csv", b.source)))?;
        }
        if !self.backbones.is_empty() {
            let report = serde_json::to_string_pretty(&self.report())?;
            fs::write(dir.join("report.json"), report + "\n")?;
        }
        Ok(())
    }

    /// State-space points `K(theta) + W(rho e^{i gamma}, theta)` on a
    /// `(rho, gamma, theta)` grid reaching the configured amplitude.
    fn write_surface(&self, path: &Path, m: &ManifoldModel, dec: &DichotomyDecomposition) -> Result<()> {
        let wp = m.physical(dec);
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        let n = wp.n_out;
        write!(f, "rho,gamma,theta")?;
        for i in 0..n {
            write!(f, ",x{i}")?;
        }
        writeln!(f)?;
        if wp.n_in != 2 {
            return Ok(());
        }
        let (zi, ci) = to_polar(&m.r, m.continuous).map(|p| (p.z_index, p.conj_index)).unwrap_or((0, 1));
        let norm = AmplitudeNormalization::from_series(&wp, zi, ci);
        let rho_max = norm.rho(self.config.r_max).unwrap_or(self.config.r_max);
        let k = self.config.surface_points;
        for th in grid_angles(grid_size(wp.ell)) {
            let base = self.torus.torus.eval_real(th);
            for a in 0..k {
                let rho = rho_max * a as f64 / (k - 1) as f64;
                for g in grid_angles(k) {
                    let z = C64::from_polar(rho, g);
                    let mut x = vec![C64::new(0.0, 0.0); 2];
                    x[zi] = z;
                    x[ci] = z.conj();
                    let w = wp.evaluate(&x, th)?;
                    write!(f, "{rho:e},{g:e},{th:e}")?;
                    for i in 0..n {
                        write!(f, ",{:e}", base[i] + w[i].re)?;
                    }
                    writeln!(f)?;
                }
            }
        }
        f.flush()?;
        Ok(())
    }
}

fn damping_of(lambda: C64) -> f64 {
    let t = lambda.arg().abs();
    if t > 0.0 {
        -lambda.norm().ln() / t
    } else {
        f64::NAN
    }
}

/// Runs every stage and writes all artifacts into the configured output directory.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    let run = PipelineRun::execute(config, Stage::Rom)?;
    run.write(&config.output)?;
    Ok(run)
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelReport {
    pub name: String,
    pub amplitude: f64,
    pub omega_f: f64,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusReport {
    pub max_abs: f64,
    pub iterations: Option<usize>,
    pub kantorovich: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub index: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: [f64; 2],
    pub is_pair: bool,
    pub frequency: f64,
    pub damping_ratio: f64,
    pub quotient: Option<f64>,
    pub members: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Selection {
    pub clusters: Vec<usize>,
    pub coords: Vec<usize>,
    pub complement: Vec<usize>,
    pub quotient: Option<f64>,
    pub complement_quotient: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Residuals {
    pub torus: f64,
    pub torus_fine: f64,
    pub frame: Option<f64>,
    pub frame_left_invariance: Option<f64>,
    pub frame_right_invariance: Option<f64>,
    pub map_linear_part: Option<f64>,
    pub field_linear_part: Option<f64>,
    pub foliation_u: Option<f64>,
    pub foliation_v: Option<f64>,
    pub reconstruction: Option<f64>,
    /// Map invariance of the reconstructed immersion. A cross-check only: the
    /// constraints hold exactly but invariance is inherited up to the harmonic
    /// truncation, so this decays with `ell` rather than sitting at round-off.
    pub manifold_foil_map_invariance: Option<f64>,
    pub manifold_map: Option<f64>,
    pub manifold_ode: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BackboneSummary {
    pub file: String,
    pub omega0: f64,
    pub zeta0: f64,
    pub e_rel_min_amplitude: f64,
    pub e_rel_max: f64,
    /// Largest amplitude below which `E_rel < 1e-4` throughout.
    pub valid_up_to: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub model: ModelReport,
    pub config: PipelineConfig,
    pub effective_ell: usize,
    pub rotation: Option<f64>,
    pub torus: TorusReport,
    pub spectrum: Option<Vec<ClusterReport>>,
    pub selection: Option<Selection>,
    pub resonances: BTreeMap<String, Vec<ResonanceHit>>,
    pub residuals: Residuals,
    pub backbones: BTreeMap<String, BackboneSummary>,
    pub warnings: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}
