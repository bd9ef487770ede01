use std::path::Path;
use std::process::{Command, Output};

use quasifoil::polyalg::PowerFourierMap;
use quasifoil::rom::BackboneCurves;

fn quasifoil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasifoil")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = quasifoil(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn pipeline_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let stdout = ok(&["pipeline", "--model", "twomass", "--mode", "1", "--r-points", "12", "-o", dir.to_str().unwrap()]);
    assert!(stdout.contains("omega(0) = 0.655"), "{stdout}");
    for f in [
        "torus.csv",
        "spectrum.csv",
        "foliation_u.json",
        "foliation_r.json",
        "foliation_v.json",
        "report.json",
    ] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    for tag in ["foil", "map", "ode"] {
        let b = BackboneCurves::read_csv(&dir.join(format!("backbone_{tag}.csv"))).unwrap();
        assert_eq!(b.len(), 12);
        assert_eq!(b.source, tag);
        let w = PowerFourierMap::from_json(&std::fs::read_to_string(dir.join(format!("manifold_{tag}.json"))).unwrap())
            .unwrap();
        assert_eq!((w.n_in, w.n_out, w.sigma), (2, 4, 7));
        assert!(dir.join(format!("manifold_{tag}.csv")).is_file());
    }
    let r = report(&dir);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["model"]["name"], "twomass");
    assert_eq!(r["selection"]["clusters"].as_array().unwrap().len(), 1);
    for key in ["torus", "foliation_u", "foliation_v", "reconstruction", "manifold_map", "manifold_ode"] {
        let v = r["residuals"][key].as_f64().unwrap_or_else(|| panic!("{key}"));
        assert!(v < 1e-9, "{key} = {v}");
    }
}

#[test]
fn stages_stop_where_asked() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spectrum");
    ok(&["spectrum", "-o", spec.to_str().unwrap()]);
    assert!(spec.join("spectrum.csv").is_file());
    assert!(!spec.join("foliation_u.json").exists());
    assert!(!spec.join("report.json").exists());

    let rom = tmp.path().join("rom");
    ok(&["rom", "--r-points", "4", "-o", rom.to_str().unwrap()]);
    let mut names: Vec<String> = std::fs::read_dir(&rom)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["backbone_foil.csv", "backbone_map.csv", "backbone_ode.csv"]);

    let torus = tmp.path().join("torus");
    ok(&["torus", "--amplitude", "0.03", "--ell", "3", "-o", torus.to_str().unwrap()]);
    let text = std::fs::read_to_string(torus.join("torus.csv")).unwrap();
    assert!(text.starts_with("theta,x0,x1,x2,x3\n"));
    assert_eq!(text.lines().count(), 129);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "model = \"twomass\"\nmode = 2\nr_points = 5\n").unwrap();
    let dir = tmp.path().join("out");
    ok(&["pipeline", "-c", cfg.to_str().unwrap(), "--mode", "1", "-o", dir.to_str().unwrap()]);
    let r = report(&dir);
    assert_eq!(r["config"]["model"], "twomass");
    assert_eq!(r["config"]["mode"], 1);
    assert_eq!(r["config"]["r_points"], 5);
}

#[test]
fn bad_input_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "sigmaa = 3\n").unwrap();
    let out = quasifoil(&["pipeline", "-c", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigmaa"));

    let out = quasifoil(&["spectrum", "--model", "threemass"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn compare_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |s: &str| tmp.path().join(s).to_str().unwrap().to_string();
    ok(&["pipeline", "--r-points", "8", "-o", &p("a")]);
    ok(&["pipeline", "--r-points", "8", "-o", &p("b")]);

    let stdout = ok(&["compare", &p("a"), "-o", &p("single")]);
    assert!(stdout.contains("foil vs map"), "{stdout}");
    let csv = std::fs::read_to_string(tmp.path().join("single/comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);

    ok(&["compare", &p("a"), &p("b"), "-o", &p("pair")]);
    let c: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("pair/comparison.json")).unwrap()).unwrap();
    let same = c["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|q| q["a"].as_str().unwrap().ends_with("a:map") && q["b"].as_str().unwrap().ends_with("b:map"))
        .unwrap();
    assert_eq!(same["max_omega"], 0.0);
    assert_eq!(same["max_zeta"], 0.0);

    ok(&["pipeline", "--model", "twomass", "--r-points", "8", "-o", &p("other")]);
    let out = quasifoil(&["compare", &p("a"), &p("other")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
}
