use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quasifoil::cli::{compare, PipelineConfig, PipelineRun, Stage};
use quasifoil::odemap::PhaseForcing;
use quasifoil::Result;

#[derive(Parser)]
#[command(name = "quasifoil", version, about = "Invariant foliations and backbone curves of forced oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the invariant torus and write torus.csv.
    Torus(RunArgs),
    /// Torus plus dichotomy spectrum; writes spectrum.csv.
    Spectrum(RunArgs),
    /// Foliations of the selected mode and of its complement.
    Foliate(RunArgs),
    /// Invariant manifolds by reconstruction, map and vector field.
    Manifold(RunArgs),
    /// Backbone curves of the three manifolds.
    Rom(RunArgs),
    /// Every stage, every artifact and report.json.
    Pipeline(RunArgs),
    /// Compare backbone curves of one or more run directories.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(short, long, default_value = "compare")]
        output: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; flags override its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    omega_f: Option<f64>,
    #[arg(long, value_parser = ["cosine", "sine"])]
    forcing: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    sigma: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    mode: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    clusters: Option<Vec<usize>>,
    #[arg(long)]
    non_autonomous: bool,
    #[arg(long)]
    delta_int: Option<f64>,
    #[arg(long)]
    delta_ext: Option<f64>,
    #[arg(long)]
    r_order: Option<usize>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    r_points: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        set!(model, amplitude, omega_f, dt, steps, sigma, ell, delta_int, delta_ext, r_min, r_max, r_points, output);
        if let Some(f) = &self.forcing {
            c.forcing = if f == "sine" { PhaseForcing::Sine } else { PhaseForcing::Cosine };
        }
        if self.mode.is_some() {
            c.mode = self.mode;
            c.clusters = None;
        }
        if self.clusters.is_some() {
            c.clusters = self.clusters.clone();
        }
        if self.r_order.is_some() {
            c.r_order = self.r_order;
        }
        if self.non_autonomous {
            c.autonomous = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn summarize(run: &PipelineRun) {
    if let Some(s) = &run.torus.solution {
        println!("torus: residual {:.3e} after {} iterations", s.residual, s.iterations);
    }
    if let Some(sp) = &run.spectrum {
        let q = run.quotients();
        for (i, c) in sp.dec.clusters.iter().enumerate() {
            let mark = if sp.clusters.contains(&i) { "*" } else { " " };
            println!(
                "{mark} cluster {i}: |lambda| in [{:.6}, {:.6}], frequency {:.6}, quotient {}",
                c.alpha,
                c.beta,
                c.lambda.arg().abs() / run.config.dt,
                q[i].map_or("-".into(), |v| format!("{v:.4}"))
            );
        }
    }
    if let Some(f) = &run.foliation {
        println!(
            "foliations: {} and {} terms moved into the conjugate maps",
            f.u.resonant_terms.len(),
            f.v.resonant_terms.len()
        );
    }
    for b in &run.backbones {
        println!(
            "{:>4}: omega(0) = {:.6}, zeta(0) = {:.6}, E_rel(r_min) = {:.2e}",
            b.source, b.omega[0], b.zeta[0], b.e_rel[0]
        );
    }
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let (args, stage, full) = match cli.command {
        Command::Compare { runs, output } => {
            let c = compare(&runs, &output)?;
            for p in &c.pairs {
                println!("{} vs {}: max omega diff {:.3e}, max zeta diff {:.3e}", p.a, p.b, p.max_omega, p.max_zeta);
            }
            match c.divergence_amplitude {
                Some(r) => println!("frequencies diverge by more than 1% from r = {r:.4e}"),
                None => println!("frequencies agree within 1% on the whole grid"),
            }
            if let Some(r) = c.e_rel_crossing {
                println!("E_rel exceeds 1e-4 from r = {r:.4e}");
            }
            return Ok(());
        }
        Command::Torus(a) => (a, Stage::Torus, true),
        Command::Spectrum(a) => (a, Stage::Spectrum, true),
        Command::Foliate(a) => (a, Stage::Foliate, true),
        Command::Manifold(a) => (a, Stage::Manifold, true),
        Command::Rom(a) => (a, Stage::Rom, false),
        Command::Pipeline(a) => (a, Stage::Rom, true),
    };
    let config = args.config()?;
    let run = PipelineRun::execute(&config, stage)?;
    if full {
        run.write(&config.output)?;
    } else {
        std::fs::create_dir_all(&config.output)?;
        for b in &run.backbones {
            b.save_csv(&config.output.join(format!("backbone_{}.csv", b.source)))?;
        }
    }
    summarize(&run);
    println!("wrote {}", config.output.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
