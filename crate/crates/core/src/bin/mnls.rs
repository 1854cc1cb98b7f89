use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C;
use serde_json::{json, Value};

use mnls_ist::config::RunConfig;
use mnls_ist::evolver::{evolve_observed, EvolutionConfig, Scheme};
use mnls_ist::harness::{decay_experiment, figure3_suite, perturbed_soliton, DecayConfig, PhaseComposition, FIGURE_XI};
use mnls_ist::quadrature::RhoProducts;
use mnls_ist::scattering::{reflection_on_sigma, scattering_matrix_with, verify_scattering_symmetries, JostOptions};
use mnls_ist::soliton::{reconstruct, residue_residual, solve_coefficients, SolitonEnsemble};
use mnls_ist::spectral_plane::{lens_angle_admissible, phase_bound_check, phase_theta, PlaneGrid, RegionPartition};
use mnls_ist::spectrum::{find_zeros, DiscreteSpectrum, SearchRegion};
use mnls_ist::tfunc::{JumpContour, TFunction};
use mnls_ist::{Error, FieldSnapshot, Grid, ProblemParams, Result};

#[derive(Parser)]
#[command(name = "mnls", version, about = "Inverse scattering and spectral evolution for the mNLS equation on a unit background")]
struct Cli {
    /// JSON file with flat dotted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `key=value` override, applied after the config file (repeatable, last wins).
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scattering matrix at the given z samples.
    Scatter {
        #[arg(long)]
        field: PathBuf,
        /// JSON array of [re, im] pairs.
        #[arg(long)]
        z_samples: PathBuf,
    },
    /// Discrete spectrum and norming constants.
    Spectrum {
        #[arg(long)]
        field: PathBuf,
        /// Search region as JSON; defaults to the standard upper-left search.
        #[arg(long)]
        region: Option<PathBuf>,
    },
    /// Reflectionless field from a spectrum.
    Soliton {
        #[arg(long)]
        spectrum: PathBuf,
        /// JSON array of expanded eigenvalue indices to keep.
        #[arg(long)]
        lambda: Option<PathBuf>,
        #[arg(long)]
        t: Option<f64>,
        /// JSON object {"L": .., "n": ..}.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Pseudospectral evolution of a field.
    Evolve {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Soliton-region decay experiment.
    Asym,
    /// Quick self-checks with PASS/FAIL lines.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Sign charts of Im θ.
    Figures {
        /// Comma-separated ξ values.
        #[arg(long)]
        xi: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let kind = if e.is_input() || matches!(e, Error::Topology { .. } | Error::Design { .. }) {
                "input"
            } else {
                "numerical"
            };
            eprintln!("{}", json!({ "error": kind, "message": e.to_string() }));
            ExitCode::from(if kind == "input" { 2 } else { 3 })
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &cli.config {
        cfg.merge_file(p)?;
    }
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = resolve(cli)?;
    fs::create_dir_all(&cli.out)?;
    let out = Out { dir: cli.out.clone(), config: cfg.to_json() };
    match &cli.command {
        Command::Scatter { field, z_samples } => scatter(&cfg, &out, field, z_samples),
        Command::Spectrum { field, region } => spectrum(&cfg, &out, field, region.as_deref()),
        Command::Soliton { spectrum, lambda, t, grid } => soliton(&cfg, &out, spectrum, lambda.as_deref(), *t, grid.as_deref()),
        Command::Evolve { field, dt, steps } => evolve(&cfg, &out, field, *dt, *steps),
        Command::Asym => asym(&cfg, &out),
        Command::Verify { suite } => verify(&cfg, &out, suite),
        Command::Figures { xi } => figures(&cfg, &out, xi.as_deref()),
    }
}

/// Artifact writer; every artifact carries the resolved config.
struct Out {
    dir: PathBuf,
    config: Value,
}

impl Out {
    fn json(&self, name: &str, mut body: Value) -> Result<()> {
        if let Value::Object(m) = &mut body {
            m.insert("config".into(), self.config.clone());
        }
        let path = self.dir.join(name);
        serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &body)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn field(&self, name: &str, f: &FieldSnapshot) -> Result<()> {
        let path = self.dir.join(name);
        f.write_csv_annotated(BufWriter::new(File::create(&path)?), &[format!("config {}", self.config)])?;
        println!("wrote {}", path.display());
        Ok(())
    }

    /// CSV body prefixed by a `# config {...}` comment line.
    fn csv(&self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = format!("# config {}\n", self.config).into_bytes();
        write(&mut buf)?;
        let path = self.dir.join(name);
        fs::write(&path, buf)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn report(name: &str, pass: bool, detail: impl std::fmt::Display) -> bool {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn read_field(path: &Path) -> Result<FieldSnapshot> {
    FieldSnapshot::read_csv(File::open(path)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn jost_options(cfg: &RunConfig) -> JostOptions {
    JostOptions { rtol: cfg.f64("jost.rtol"), atol: cfg.f64("jost.atol"), ..JostOptions::default() }
}

fn grid_from(cfg: &RunConfig) -> Result<Grid> {
    Grid::with_spacing(cfg.f64("grid.L"), cfg.f64("grid.h"))
}

fn evolution_config(cfg: &RunConfig) -> Result<EvolutionConfig> {
    let scheme = match cfg.text("evolve.scheme") {
        "etd_rk4" => Scheme::EtdRk4,
        "if_rk4" => Scheme::IfRk4,
        s => return Err(Error::Config(format!("unknown scheme `{s}`"))),
    };
    Ok(EvolutionConfig {
        scheme,
        dealias_fraction: cfg.f64("evolve.dealias"),
        cfl: cfg.f64("evolve.cfl"),
        ..EvolutionConfig::new(cfg.f64("evolve.dt"), cfg.usize("evolve.steps"))
    })
}

fn scatter(cfg: &RunConfig, out: &Out, field: &Path, z_samples: &Path) -> Result<bool> {
    let f = read_field(field)?;
    f.check_relaxed(cfg.f64("boundary.tol"))?;
    let zs: Vec<[f64; 2]> = read_json(z_samples)?;
    let zs: Vec<C> = zs.iter().map(|p| C::new(p[0], p[1])).collect();
    let opts = jost_options(cfg);
    let samples = zs.iter().map(|&z| scattering_matrix_with(&f, z, &opts)).collect::<Result<Vec<_>>>()?;
    let symmetries = verify_scattering_symmetries(&samples, f.params.q_minus, f.params.q_plus).ok();
    let det = samples.iter().map(|s| (s.det() - 1.0).norm()).fold(0.0, f64::max);
    let ok = report("det S = 1", det < 1e-6, format!("{det:.3e}"));
    let ok = match &symmetries {
        Some(r) => report("scattering symmetries", r.max() < 1e-6, format!("{:.3e}", r.max())) && ok,
        None => ok,
    };
    out.json(
        "scatter.json",
        json!({ "nu0": mnls_ist::scattering::nu0(&f), "samples": samples, "symmetries": symmetries }),
    )?;
    Ok(ok)
}

fn spectrum(cfg: &RunConfig, out: &Out, field: &Path, region: Option<&Path>) -> Result<bool> {
    let f = read_field(field)?;
    f.check_relaxed(cfg.f64("boundary.tol"))?;
    let region = match region {
        Some(p) => read_json(p)?,
        None => SearchRegion { zero_tol: cfg.f64("spectrum.zero_tol"), ..SearchRegion::standard(cfg.f64("spectrum.r_max")) },
    };
    let sp = find_zeros(&f, &region)?;
    println!("found {} quartet(s) and {} circle pair(s)", sp.quartets.len(), sp.circle.len());
    let mut body = serde_json::to_value(&sp)?;
    body["region"] = serde_json::to_value(&region)?;
    out.json("spectrum.json", body)?;
    Ok(true)
}

fn soliton(
    cfg: &RunConfig,
    out: &Out,
    spectrum: &Path,
    lambda: Option<&Path>,
    t: Option<f64>,
    grid: Option<&Path>,
) -> Result<bool> {
    let sp = DiscreteSpectrum::from_json(&fs::read_to_string(spectrum)?)?;
    let t = t.unwrap_or(cfg.f64("soliton.t"));
    let grid = match grid {
        Some(p) => {
            let g: Value = read_json(p)?;
            let l = g["L"].as_f64().ok_or_else(|| Error::Config("grid JSON needs a numeric `L`".into()))?;
            let n = g["n"].as_u64().ok_or_else(|| Error::Config("grid JSON needs an integer `n`".into()))?;
            Grid::new(l, n as usize)?
        }
        None => grid_from(cfg)?,
    };
    let ens = match lambda {
        Some(p) => {
            let sel: Vec<usize> = read_json(p)?;
            let total = sp.expanded().len();
            if let Some(bad) = sel.iter().find(|&&i| i >= total) {
                return Err(Error::Config(format!("lambda index {bad} out of range 0..{total}")));
            }
            let part = RegionPartition { lambda_set: sel, ..RegionPartition::empty() };
            SolitonEnsemble::from_partition(&sp, &part, &TFunction::from_points(vec![], vec![], RhoProducts::zero()))?
        }
        None => SolitonEnsemble::reflectionless(&sp)?,
    };
    let rec = reconstruct(t, &grid, &ens)?;
    let mut worst: f64 = 0.0;
    if !ens.is_empty() {
        for j in [grid.n / 4, grid.n / 2, 3 * grid.n / 4] {
            let sol = solve_coefficients(grid.x(j), t, rec.nu_minus[j], &ens)?;
            worst = worst.max(residue_residual(&sol, &ens, 1e-4)?);
        }
    }
    let ok = report("residue conditions", worst < 1e-6, format!("{worst:.3e}"));
    out.field("soliton.csv", &rec.field)?;
    Ok(ok)
}

fn evolve(cfg: &RunConfig, out: &Out, field: &Path, dt: Option<f64>, steps: Option<usize>) -> Result<bool> {
    let f = read_field(field)?;
    let mut ec = evolution_config(cfg)?;
    if let Some(dt) = dt {
        ec.dt = dt;
    }
    if let Some(s) = steps {
        ec.n_steps = s;
    }
    let every = cfg.usize("evolve.checkpoint_every");
    let mut k = 0;
    let run = evolve_observed(&f, &ec, every, |snap| {
        k += 1;
        out.field(&format!("checkpoint_{k:04}.csv"), snap)
    })?;
    let drift = match (run.diagnostics.first(), run.diagnostics.last()) {
        (Some(a), Some(b)) => (b.mass - a.mass).abs(),
        _ => 0.0,
    };
    let ok = report("mass drift", drift < 1e-6, format!("{drift:.3e}"));
    out.field("evolved.csv", &run.field)?;
    out.json("evolve.json", json!({ "evolution": run.config, "diagnostics": run.diagnostics, "frame_offset": run.frame_offset }))?;
    Ok(ok)
}

fn decay_config(cfg: &RunConfig) -> Result<DecayConfig> {
    let mut d = DecayConfig::default();
    d.t_samples = cfg.numbers("decay.t_samples");
    let w = cfg.numbers("decay.window");
    if w.len() != 2 {
        return Err(Error::Config("decay.window must hold two numbers".into()));
    }
    d.window = (w[0], w[1]);
    d.warmup = cfg.f64("decay.warmup");
    d.composition = match cfg.text("decay.composition") {
        "single" => PhaseComposition::Single,
        "literal" => PhaseComposition::Literal,
        s => return Err(Error::Config(format!("unknown composition `{s}`"))),
    };
    d.jump_contour = match cfg.text("decay.jump_contour") {
        "real_axis" => JumpContour::RealAxis,
        "imaginary_axis" => JumpContour::ImaginaryAxis,
        s => return Err(Error::Config(format!("unknown jump contour `{s}`"))),
    };
    let base = evolution_config(cfg)?;
    d.evolution = EvolutionConfig {
        dt: base.dt,
        scheme: base.scheme,
        dealias_fraction: base.dealias_fraction,
        cfl: base.cfl,
        frame_velocity: cfg.f64("decay.frame_velocity"),
        sponge: Some(mnls_ist::evolver::Sponge {
            width: cfg.f64("decay.sponge_width"),
            strength: cfg.f64("decay.sponge_strength"),
        }),
        ..d.evolution
    };
    d.search = SearchRegion { zero_tol: cfg.f64("spectrum.zero_tol"), ..SearchRegion::standard(cfg.f64("spectrum.r_max")) };
    d.rho_r_max = cfg.f64("rho.r_max");
    d.rho_nodes = cfg.usize("rho.nodes");
    Ok(d)
}

fn asym(cfg: &RunConfig, out: &Out) -> Result<bool> {
    let d = decay_config(cfg)?;
    let grid = Grid::new(cfg.f64("decay.L"), cfg.usize("decay.n"))?;
    let init = perturbed_soliton(&grid, cfg.f64("alpha"), cfg.f64("decay.phi"), cfg.f64("decay.amplitude"), 0.0)?;
    let exp = decay_experiment(&init, &d)?;
    for e in &exp.errors {
        println!("t = {:6.2}  Linf = {:.4e}  L2 = {:.4e}", e.t, e.linf, e.l2);
    }
    let slope_ok = (-1.1..=-0.5).contains(&exp.fitted_slope) && !exp.degenerate;
    let ok = report("decay slope in [-1.1, -0.5]", slope_ok, format!("{:.3}", exp.fitted_slope))
        & report("fit R^2 > 0.9", exp.fit_r2 > 0.9, format!("{:.3}", exp.fit_r2));
    out.csv("decay.csv", |b| exp.write_csv(b))?;
    out.json("decay.json", serde_json::to_value(&exp)?)?;
    Ok(ok)
}

fn verify(cfg: &RunConfig, out: &Out, suite: &str) -> Result<bool> {
    let known = ["constant", "tanh", "theta", "soliton", "evolver"];
    let run_all = suite == "all";
    if !run_all && !known.contains(&suite) {
        return Err(Error::Config(format!("unknown suite `{suite}`; expected all or one of {known:?}")));
    }
    let wants = |s: &str| run_all || suite == s;
    let alpha = cfg.f64("alpha");
    let mut results = Vec::new();
    let mut record = |name: &str, value: f64, tol: f64| {
        let pass = report(name, value <= tol, format!("{value:.3e} (tol {tol:.0e})"));
        results.push(json!({ "check": name, "value": value, "tol": tol, "pass": pass }));
        pass
    };
    let mut ok = true;
    let zs = mnls_ist::scattering::symmetric_sigma_set(&[2.0, 1.5]);
    if wants("constant") {
        let f = FieldSnapshot::constant(Grid::new(5.0, 501)?, ProblemParams::unit(alpha))?;
        let s = reflection_on_sigma(&f, &zs)?;
        let refl = s.iter().map(|x| x.rho.norm().max(x.rho_tilde.norm())).fold(0.0, f64::max);
        ok &= record("constant: reflection vanishes", refl, 1e-12);
        let rep = verify_scattering_symmetries(&s, f.params.q_minus, f.params.q_plus)?;
        ok &= record("constant: scattering symmetries", rep.max(), 1e-12);
        let sp = find_zeros(&f, &SearchRegion::standard(2.0))?;
        ok &= record("constant: no discrete spectrum", (sp.quartets.len() + sp.circle.len()) as f64, 0.0);
    }
    if wants("tanh") {
        let f = FieldSnapshot::tanh(Grid::new(15.0, 3001)?, alpha)?;
        let s = reflection_on_sigma(&f, &zs)?;
        let rep = verify_scattering_symmetries(&s, f.params.q_minus, f.params.q_plus)?;
        ok &= record("tanh: scattering symmetries", rep.max(), 1e-6);
        ok &= record("tanh: closed-form nu0", (mnls_ist::scattering::nu0(&f) - 1.0 / alpha).abs(), 1e-6);
    }
    if wants("theta") {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.usize("seed") as u64);
        let params = ProblemParams::unit(alpha).with_xi(6.5);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let z = C::from_polar(rng.gen_range(0.2..3.0), rng.gen_range(-3.1..3.1));
            let a = phase_theta(z, &params)?;
            let b = phase_theta(-z.inv(), &params)?;
            worst = worst.max((a + b).norm() / (1.0 + a.norm()));
        }
        ok &= record("theta: odd under z -> -1/z", worst, 1e-12);
    }
    if wants("soliton") {
        let zeta = C::from_polar(1.0, 2.1);
        let sp = DiscreteSpectrum {
            quartets: vec![],
            circle: vec![mnls_ist::spectrum::CircleEigenpair { zeta, c: -zeta }],
            alpha,
            q_minus: C::new(1.0, 0.0),
        };
        let ens = SolitonEnsemble::reflectionless(&sp)?;
        let sol = solve_coefficients(0.3, 0.0, 0.0, &ens)?;
        ok &= record("soliton: residue conditions", residue_residual(&sol, &ens, 1e-4)?, 1e-6);
        let empty = SolitonEnsemble::reflectionless(&DiscreteSpectrum::empty(alpha, C::new(1.0, 0.0)))?;
        let g = Grid::new(5.0, 101)?;
        let rec = reconstruct(0.0, &g, &empty)?;
        let dev = rec.field.q.iter().map(|q| (q - 1.0).norm()).fold(0.0, f64::max);
        ok &= record("soliton: empty set gives the background", dev, 0.0);
    }
    if wants("evolver") {
        let g = Grid::new(10.0, 257)?;
        let f = FieldSnapshot::constant(g, ProblemParams::unit(alpha))?;
        let run = evolve_observed(&f, &EvolutionConfig::new(1e-3, 200), 0, |_| Ok(()))?;
        ok &= record("evolver: constant background is stationary", run.field.linf_distance(&f), 1e-12);
    }
    out.json("verify.json", json!({ "suite": suite, "checks": results }))?;
    println!("{}", if ok { "PASS all checks" } else { "FAIL some checks" });
    Ok(ok)
}

fn figures(cfg: &RunConfig, out: &Out, xi: Option<&str>) -> Result<bool> {
    let xis: Vec<f64> = match xi {
        Some(s) => s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| Error::Config(format!("bad xi `{t}`: {e}"))))
            .collect::<Result<_>>()?,
        None => FIGURE_XI.to_vec(),
    };
    let n = cfg.usize("figures.n");
    let e = cfg.f64("figures.extent");
    let grid = PlaneGrid { re_min: -e, re_max: e, n_re: n, im_min: -e, im_max: e, n_im: n };
    let alpha = cfg.f64("alpha");
    let charts = figure3_suite(&xis, alpha, &grid, cfg.f64("sign.zero_tol"))?;
    let mut summary = Vec::new();
    for (i, c) in charts.iter().enumerate() {
        out.csv(&format!("sign_chart_{i:02}.csv"), |b| c.chart.write_csv(b))?;
        println!("xi = {:7.3}  first-quadrant sign regions = {}", c.xi, c.first_quadrant_regions);
        let mut entry = json!({ "xi": c.xi, "chart": format!("sign_chart_{i:02}.csv"), "first_quadrant_regions": c.first_quadrant_regions });
        if c.xi > 5.0 && c.xi < 7.0 {
            let psi = admissible_psi(c.xi);
            let params = ProblemParams::unit(alpha).with_xi(c.xi);
            let radii: Vec<f64> = (1..=40).map(|k| 0.1 * k as f64).filter(|r| (r - 1.0f64).abs() > 1e-9).collect();
            let rep = phase_bound_check(psi, &params, &radii)?;
            entry["phase_bound"] = serde_json::to_value(&rep)?;
        }
        summary.push(entry);
    }
    out.json("figures.json", json!({ "charts": summary }))?;
    Ok(true)
}

/// Half of the largest lens angle allowed at ξ.
fn admissible_psi(xi: f64) -> f64 {
    let d = (xi - 6.0).abs();
    let psi = 0.5 * (2.0 * d / (d + 1.0)).min(1.0).acos();
    debug_assert!(lens_angle_admissible(psi, xi));
    psi
}
