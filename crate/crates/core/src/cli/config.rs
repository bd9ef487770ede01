use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::{SolveOptions, DEFAULT_DELTA_EXT, DEFAULT_DELTA_INT};
use crate::odemap::{builtin_model, PhaseForcing, StroboscopicMapSpec, VectorFieldModel, DEFAULT_DT, DEFAULT_STEPS};
use crate::rom::{DEFAULT_R_MIN, DEFAULT_R_POINTS};

/// Everything a pipeline run depends on. Read from a flat TOML file;
/// unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub model: String,
    /// Forcing amplitude `A`.
    pub amplitude: f64,
    /// Forcing frequency.
    pub omega_f: f64,
    /// Phase forcing function of the single-mass model.
    pub forcing: PhaseForcing,
    pub dt: f64,
    /// RK4 substeps per sampling period.
    pub steps: usize,
    pub sigma: usize,
    pub ell: usize,
    /// Mode number, counted from the slowest oscillation.
    pub mode: Option<usize>,
    /// Explicit cluster indices; overrides `mode`.
    pub clusters: Option<Vec<usize>>,
    pub autonomous: bool,
    pub delta_int: f64,
    pub delta_ext: f64,
    /// Highest order allowed in the conjugate dynamics; `1` keeps it linear.
    pub r_order: Option<usize>,
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub torus_points: usize,
    pub torus_tol: f64,
    pub torus_max_iter: usize,
    /// Radial and angular samples of the manifold surface files.
    pub surface_points: usize,
    pub output: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: "onemass".into(),
            amplitude: 0.0,
            omega_f: 1.2,
            forcing: PhaseForcing::Cosine,
            dt: DEFAULT_DT,
            steps: DEFAULT_STEPS,
            sigma: 7,
            ell: 7,
            mode: Some(1),
            clusters: None,
            autonomous: true,
            delta_int: DEFAULT_DELTA_INT,
            delta_ext: DEFAULT_DELTA_EXT,
            r_order: None,
            r_min: DEFAULT_R_MIN,
            r_max: 0.5,
            r_points: DEFAULT_R_POINTS,
            torus_points: 128,
            torus_tol: 1e-11,
            torus_max_iter: 25,
            surface_points: 16,
            output: PathBuf::from("out"),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be positive, got {v}")))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        builtin_model(&self.model, 0.0, 1.0)?;
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config(format!("`amplitude` must be non-negative, got {}", self.amplitude)));
        }
        positive("omega_f", self.omega_f)?;
        positive("dt", self.dt)?;
        positive("delta_int", self.delta_int)?;
        positive("delta_ext", self.delta_ext)?;
        positive("r_min", self.r_min)?;
        positive("r_max", self.r_max)?;
        positive("torus_tol", self.torus_tol)?;
        if self.steps == 0 || self.torus_max_iter == 0 || self.torus_points == 0 {
            return Err(Error::Config("`steps`, `torus_max_iter` and `torus_points` must be at least 1".into()));
        }
        if self.sigma < 1 {
            return Err(Error::Config("`sigma` must be at least 1".into()));
        }
        if self.r_order == Some(0) {
            return Err(Error::Config("`r_order` must be at least 1".into()));
        }
        if self.delta_ext > self.delta_int {
            return Err(Error::Config(format!(
                "`delta_ext` ({}) exceeds `delta_int` ({})",
                self.delta_ext, self.delta_int
            )));
        }
        if self.r_min >= self.r_max || self.r_points < 2 {
            return Err(Error::Config(format!(
                "amplitude grid needs r_min < r_max and at least 2 points, got [{}, {}] with {}",
                self.r_min, self.r_max, self.r_points
            )));
        }
        if self.surface_points < 2 {
            return Err(Error::Config("`surface_points` must be at least 2".into()));
        }
        match (&self.mode, &self.clusters) {
            (_, Some(c)) if c.is_empty() => Err(Error::Config("`clusters` is empty".into())),
            (None, None) => Err(Error::Config("select a `mode` or `clusters`".into())),
            (Some(0), None) => Err(Error::Config("`mode` counts from 1".into())),
            _ => Ok(()),
        }
    }

    pub fn vector_field(&self) -> Result<VectorFieldModel> {
        let mut m = builtin_model(&self.model, self.amplitude, self.omega_f)?;
        if let crate::odemap::ModelKind::OneMass { forcing, .. } = &mut m.kind {
            *forcing = self.forcing;
        }
        Ok(m)
    }

    /// Harmonics actually used: an unforced model is autonomous and needs none.
    pub fn effective_ell(&self) -> usize {
        if self.amplitude == 0.0 {
            0
        } else {
            self.ell
        }
    }

    pub fn map_spec(&self) -> StroboscopicMapSpec {
        StroboscopicMapSpec {
            dt: self.dt,
            steps: self.steps,
            sigma: self.sigma,
            ell: self.effective_ell(),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            autonomous: self.autonomous,
            delta_int: self.delta_int,
            delta_ext: self.delta_ext,
            r_order: self.r_order.unwrap_or(usize::MAX),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_roundtrip() {
        let c = PipelineConfig {
            amplitude: 0.03,
            clusters: Some(vec![0]),
            r_order: Some(1),
            ..Default::default()
        };
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = PipelineConfig::from_toml("model = \"twomass\"\nsigmaa = 3\n").unwrap_err();
        assert!(e.to_string().contains("sigmaa"), "{e}");
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = PipelineConfig::from_toml("model = \"twomass\"\nmode = 2\n").unwrap();
        assert_eq!(c.sigma, 7);
        assert_eq!(c.mode, Some(2));
        c.validate().unwrap();
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "sigma = 0",
            "dt = -0.8",
            "model = \"threemass\"",
            "r_min = 1.0\nr_max = 0.5",
            "mode = 0",
            "delta_ext = 0.5",
            "clusters = []",
        ] {
            let c = PipelineConfig::from_toml(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
    }

    #[test]
    fn unforced_runs_drop_harmonics() {
        let c = PipelineConfig::default();
        assert_eq!(c.effective_ell(), 0);
        let f = PipelineConfig { amplitude: 0.03, ..c };
        assert_eq!(f.effective_ell(), 7);
    }
}
