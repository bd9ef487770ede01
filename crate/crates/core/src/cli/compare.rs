use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rom::BackboneCurves;

/// Pairwise relative frequency difference above which two curves disagree.
pub const DIVERGENCE_LEVEL: f64 = 0.01;
/// Accuracy level of the mean relative invariance error.
pub const E_REL_LEVEL: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct Curve {
    pub label: String,
    #[serde(skip)]
    pub data: BackboneCurves,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub r_grid: Vec<f64>,
    /// `(a, b, |omega_a - omega_b| / |omega_b|, |zeta_a - zeta_b| / |zeta_b|)` per pair.
    pub pairs: Vec<PairDifference>,
    /// Smallest amplitude where some pair differs in frequency by more than 1%.
    pub divergence_amplitude: Option<f64>,
    /// Smallest amplitude where some curve reports `E_rel` above `1e-4`.
    pub e_rel_crossing: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairDifference {
    pub a: String,
    pub b: String,
    pub omega: Vec<f64>,
    pub zeta: Vec<f64>,
    pub max_omega: f64,
    pub max_zeta: f64,
}

fn run_identity(dir: &Path) -> Result<Option<(String, String)>> {
    let p = dir.join("report.json");
    if !p.exists() {
        return Ok(None);
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p)?)?;
    let model = v["model"]["name"].to_string();
    let sel = v["selection"]["clusters"].to_string();
    Ok(Some((model, sel)))
}

/// Backbone curves found in the run directories, labelled `dir:method`
/// when more than one directory is given.
pub fn load_runs(dirs: &[PathBuf]) -> Result<Vec<Curve>> {
    if dirs.is_empty() {
        return Err(Error::IncompatibleRuns("no run directories given".into()));
    }
    let mut ident = None;
    let mut curves = Vec::new();
    for d in dirs {
        if let Some(id) = run_identity(d)? {
            match &ident {
                None => ident = Some(id),
                Some(first) if *first != id => {
                    return Err(Error::IncompatibleRuns(format!(
                        "{} has model/mode {:?}, expected {:?}",
                        d.display(),
                        id,
                        first
                    )))
                }
                _ => {}
            }
        }
        let mut found = false;
        for m in ["foil", "map", "ode"] {
            let p = d.join(format!("backbone_{m}.csv"));
            if p.exists() {
                let label = if dirs.len() > 1 { format!("{}:{m}", d.display()) } else { m.to_string() };
                curves.push(Curve { label, data: BackboneCurves::read_csv(&p)? });
                found = true;
            }
        }
        if !found {
            return Err(Error::IncompatibleRuns(format!("{} holds no backbone files", d.display())));
        }
    }
    Ok(curves)
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Compares curves sampled on the same amplitude grid.
pub fn compare_curves(curves: &[Curve]) -> Result<Comparison> {
    let first = &curves[0].data;
    for c in &curves[1..] {
        let same = c.data.r_grid.len() == first.r_grid.len()
            && c.data.r_grid.iter().zip(&first.r_grid).all(|(a, b)| relative(*a, *b) < 1e-12);
        if !same {
            return Err(Error::IncompatibleRuns(format!(
                "{} and {} use different amplitude grids",
                curves[0].label, c.label
            )));
        }
    }
    let n = first.r_grid.len();
    let mut pairs = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (a, b) = (&curves[i].data, &curves[j].data);
            let omega: Vec<f64> = (0..n).map(|k| relative(a.omega[k], b.omega[k])).collect();
            let zeta: Vec<f64> = (0..n).map(|k| relative(a.zeta[k], b.zeta[k])).collect();
            pairs.push(PairDifference {
                a: curves[i].label.clone(),
                b: curves[j].label.clone(),
                max_omega: omega.iter().cloned().fold(0.0, f64::max),
                max_zeta: zeta.iter().cloned().fold(0.0, f64::max),
                omega,
                zeta,
            });
        }
    }
    let divergence_amplitude =
        (0..n).find(|&k| pairs.iter().any(|p| p.omega[k] > DIVERGENCE_LEVEL)).map(|k| first.r_grid[k]);
    let e_rel_crossing =
        (0..n).find(|&k| curves.iter().any(|c| c.data.e_rel[k] > E_REL_LEVEL)).map(|k| first.r_grid[k]);
    Ok(Comparison {
        labels: curves.iter().map(|c| c.label.clone()).collect(),
        r_grid: first.r_grid.clone(),
        pairs,
        divergence_amplitude,
        e_rel_crossing,
    })
}

impl Comparison {
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "r")?;
        for p in &self.pairs {
            write!(out, ",omega[{}|{}],zeta[{}|{}]", p.a, p.b, p.a, p.b)?;
        }
        writeln!(out)?;
        for k in 0..self.r_grid.len() {
            write!(out, "{:e}", self.r_grid[k])?;
            for p in &self.pairs {
                write!(out, ",{:e},{:e}", p.omega[k], p.zeta[k])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Loads, compares and writes `comparison.csv` and `comparison.json` into `out`.
pub fn compare(dirs: &[PathBuf], out: &Path) -> Result<Comparison> {
    let curves = load_runs(dirs)?;
    let c = compare_curves(&curves)?;
    fs::create_dir_all(out)?;
    let mut f = fs::File::create(out.join("comparison.csv"))?;
    c.write_csv(&mut f)?;
    fs::write(out.join("comparison.json"), serde_json::to_string_pretty(&c)? + "\n")?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(label: &str, omega: Vec<f64>, e_rel: Vec<f64>) -> Curve {
        let n = omega.len();
        Curve {
            label: label.into(),
            data: BackboneCurves {
                r_grid: (1..=n).map(|i| i as f64 * 0.1).collect(),
                amplitude: vec![0.0; n],
                zeta: vec![0.02; n],
                omega,
                e_rel,
                source: label.into(),
            },
        }
    }

    #[test]
    fn identical_curves_have_no_difference() {
        let a = curve("a", vec![1.0, 1.01, 1.02], vec![1e-8; 3]);
        let c = compare_curves(&[a.clone(), Curve { label: "b".into(), ..a }]).unwrap();
        assert_eq!(c.pairs[0].max_omega, 0.0);
        assert_eq!(c.pairs[0].max_zeta, 0.0);
        assert_eq!(c.divergence_amplitude, None);
    }

    #[test]
    fn divergence_and_crossing_located() {
        let a = curve("a", vec![1.0, 1.0, 1.0, 1.0], vec![1e-8, 1e-6, 1e-3, 1e-2]);
        let b = curve("b", vec![1.0, 1.005, 1.02, 1.05], vec![1e-8, 1e-5, 1e-5, 1e-2]);
        let c = compare_curves(&[a, b]).unwrap();
        assert_eq!(c.divergence_amplitude, Some(0.30000000000000004));
        assert_eq!(c.e_rel_crossing, Some(0.30000000000000004));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = curve("a", vec![1.0, 1.0], vec![0.0; 2]);
        let b = curve("b", vec![1.0, 1.0, 1.0], vec![0.0; 3]);
        assert!(matches!(compare_curves(&[a, b]), Err(Error::IncompatibleRuns(_))));
    }
}
