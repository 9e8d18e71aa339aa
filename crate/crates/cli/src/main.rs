//! `geoscatter`: scenario-driven front end for spectra, fronts and the
//! property suite.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geoscatter::billiard::TrajectoryRecord;
use geoscatter::output;
use geoscatter::scenario::{defaults, Overrides, Scenario, ScenarioError};
use geoscatter::spectra::{
    compare_spectra, compute_spectrum, grad_check, shoot_at, uniqueness_experiment, verify_conjugacy, Spectrum,
};
use geoscatter::verify::{front_sequence, representation_change, verify, VerifyError};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "geoscatter", version, about = "Generalised geodesic billiards on conformally flat surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spectrum grid as `NxM` (boundary parameters x launch angles).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long)]
    max_time: Option<f64>,
    #[arg(long)]
    max_reflections: Option<usize>,
    /// Absolute integrator tolerance (relative is ten times larger).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Travelling-time spectrum on the grid.
    Spectrum(Common),
    /// Compare the spectrum with that of another scenario.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        against: PathBuf,
    },
    /// Build, propagate and reflect the scenario's front.
    Fronts(Common),
    /// Gradient law table over the eligible spectrum records.
    Gradcheck(Common),
    /// Conjugacy residuals against a re-parametrised copy of the scene.
    Conjugacy(Common),
    /// Trajectory events and reflection itineraries.
    Itinerary(Common),
    /// Obstacle perturbation sweep.
    Uniqueness(Common),
    /// Full property suite; exits with 3 if any check fails.
    Verify(Common),
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let (a, b) = (n(a)?, n(b)?);
    if a == 0 || b == 0 {
        return Err("grid sizes must be positive".into());
    }
    Ok((a, b))
}

enum Failure {
    Validation(String),
    Numerical(String),
    Property(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Property(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) | Failure::Property(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Scenario(e) => e.into(),
            VerifyError::Output { .. } => Failure::Validation(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

fn load(c: &Common) -> Result<(Scenario, PathBuf), Failure> {
    let mut sc = Scenario::load(&c.scenario)?;
    sc.apply(&Overrides { grid: c.grid, max_time: c.max_time, max_reflections: c.max_reflections, tol: c.tol, seed: c.seed })?;
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Failure::Validation("--threads: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Validation(format!("--threads: {e}")))?;
    }
    let dir = sc.output_dir(c.out.as_deref());
    Ok((sc, dir))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let io = |e: std::io::Error| Failure::Validation(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    Ok(BufWriter::new(File::create(dir.join(name)).map_err(io)?))
}

fn write_csv<E: std::fmt::Display>(dir: &Path, name: &str, f: impl FnOnce(BufWriter<File>) -> Result<(), E>) -> Result<(), Failure> {
    f(create(dir, name)?).map_err(|e| Failure::Validation(format!("{}: {e}", dir.join(name).display())))?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn write_json(dir: &Path, name: &str, v: &serde_json::Value) -> Result<(), Failure> {
    let mut w = create(dir, name)?;
    let text = serde_json::to_string_pretty(v).expect("json value serialises");
    writeln!(w, "{text}").map_err(|e| Failure::Validation(format!("{}: {e}", dir.join(name).display())))?;
    println!("{text}");
    Ok(())
}

fn spectrum_of(sc: &Scenario) -> Result<Spectrum<f64>, Failure> {
    let scene = sc.scene::<f64>()?;
    Ok(compute_spectrum(&scene, &sc.grid(), &sc.caps(), &sc.integrator().without_path()).named(sc.name()))
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Spectrum(c) => {
            let (sc, dir) = load(&c)?;
            let s = spectrum_of(&sc)?;
            write_csv(&dir, "spectrum.csv", |w| output::write_spectrum(w, &s))
        }
        Command::Compare { common, against } => {
            let (sc, dir) = load(&common)?;
            let mut other = Scenario::load(&against)?;
            // the comparison is only meaningful on the same grid and caps
            other.grid = sc.grid.clone();
            other.caps = sc.caps.clone();
            let (a, b) = (spectrum_of(&sc)?, spectrum_of(&other)?);
            let cmp = compare_spectra(&a, &b).map_err(numerical)?;
            write_csv(&dir, "spectrum_a.csv", |w| output::write_spectrum(w, &a))?;
            write_csv(&dir, "spectrum_b.csv", |w| output::write_spectrum(w, &b))?;
            let report = serde_json::json!({
                "a": sc.name(),
                "b": other.name(),
                "nodes": a.records.len(),
                "compared": cmp.compared,
                "sup_dev": cmp.sup_dev,
                "mean_dev": cmp.mean_dev,
                "unmatched": cmp.unmatched,
                "sup_tol": defaults::ALMOST_SAME_SUP,
                "unmatched_tol": defaults::ALMOST_SAME_UNMATCHED,
                "almost_same": cmp.almost_same(defaults::ALMOST_SAME_SUP, defaults::ALMOST_SAME_UNMATCHED),
            });
            write_json(&dir, "comparison.json", &report)
        }
        Command::Fronts(c) => {
            let (sc, dir) = load(&c)?;
            let spec = sc.fronts.clone().ok_or_else(|| Failure::Validation("fronts: missing table".into()))?;
            let scene = sc.scene::<f64>()?;
            let seq = front_sequence(&scene, &spec, sc.caps::<f64>().max_time, &sc.integrator()).map_err(numerical)?;
            for (name, f) in &seq {
                write_csv(&dir, &format!("{name}.csv"), |w| output::write_front(w, f))?;
            }
            Ok(())
        }
        Command::Gradcheck(c) => {
            let (sc, dir) = load(&c)?;
            let scene = sc.scene::<f64>()?;
            let (caps, opts) = (sc.caps(), sc.integrator().without_path());
            let s = compute_spectrum(&scene, &sc.grid(), &caps, &opts);
            let h = sc.gradcheck.h.unwrap_or(defaults::GRAD_STEP);
            let eligible: Vec<_> = s.records.iter().filter(|r| r.is_clean_exit()).collect();
            let rows: Vec<_> = eligible.par_iter().map(|&r| (r, grad_check(&scene, r, h, &caps, &opts).ok())).collect();
            let mut errs: Vec<f64> = rows.iter().filter_map(|(_, g)| g.map(|g| g.error())).collect();
            errs.sort_by(f64::total_cmp);
            write_csv(&dir, "gradcheck.csv", |w| output::write_gradcheck(w, &rows))?;
            match errs.get(errs.len() / 2) {
                Some(m) => println!("{} records checked, median error {m:.3e}", errs.len()),
                None => println!("no eligible records"),
            }
            Ok(())
        }
        Command::Conjugacy(c) => {
            let (sc, dir) = load(&c)?;
            let scene = sc.scene::<f64>()?;
            let l = representation_change(&scene, sc.conjugacy.shift.unwrap_or([0.1, -0.05]))?;
            let n = sc.conjugacy.samples.unwrap_or(defaults::CONJUGACY_SAMPLES);
            let t_max = sc.conjugacy.t_max.unwrap_or(defaults::CONJUGACY_T_MAX);
            let rep = verify_conjugacy(&scene, &l, n, t_max, sc.seed(), &sc.caps(), &sc.integrator().without_path()).map_err(numerical)?;
            write_csv(&dir, "conjugacy.csv", |w| output::write_conjugacy(w, &rep))?;
            let summary = serde_json::json!({
                "samples": rep.samples.len(),
                "max_residual": rep.max_residual,
                "boundary_max": rep.boundary_max,
                "time_max": rep.time_max,
                "rejected": rep.rejected,
            });
            write_json(&dir, "conjugacy.json", &summary)
        }
        Command::Itinerary(c) => {
            let (sc, dir) = load(&c)?;
            let scene = sc.scene::<f64>()?;
            let (caps, opts) = (sc.caps(), sc.integrator().without_path());
            let launches: Vec<(f64, f64)> = if sc.itinerary.launches.is_empty() {
                let g = sc.grid::<f64>();
                (0..g.len()).map(|k| (g.x(k / g.ntheta), g.theta(k % g.ntheta))).collect()
            } else {
                sc.itinerary.launches.iter().map(|l| (l[0], l[1])).collect()
            };
            let recs: Vec<TrajectoryRecord<f64>> = launches
                .par_iter()
                .map(|&(x, th)| shoot_at(&scene, x, th, &caps, &opts))
                .collect::<Result<_, _>>()
                .map_err(numerical)?;
            let events: Vec<_> = recs.iter().enumerate().collect();
            write_csv(&dir, "trajectories.csv", |w| output::write_trajectories(w, &events))?;
            let rows: Vec<_> = launches.iter().zip(&recs).map(|(&(x, th), r)| (x, th, r)).collect();
            let length = sc.itinerary.length.unwrap_or(defaults::ITINERARY_LENGTH);
            write_csv(&dir, "itineraries.csv", |w| output::write_itineraries(w, &rows, length))?;
            Ok(())
        }
        Command::Uniqueness(c) => {
            let (sc, dir) = load(&c)?;
            let scene = sc.scene::<f64>()?;
            if scene.obstacles().is_empty() {
                return Err(Failure::Validation("obstacles: the sweep needs at least one obstacle".into()));
            }
            let obstacle = sc.uniqueness.obstacle.unwrap_or(0);
            let harmonic = sc.uniqueness.harmonic.unwrap_or(defaults::UNIQUENESS_HARMONIC);
            let eps = sc.uniqueness.eps.clone().unwrap_or_else(|| defaults::UNIQUENESS_EPS.to_vec());
            let (base, rows) = uniqueness_experiment(&scene, obstacle, harmonic, &eps, &sc.grid(), &sc.caps(), &sc.integrator().without_path())
                .map_err(numerical)?;
            write_csv(&dir, "spectrum.csv", |w| output::write_spectrum(w, &base))?;
            write_csv(&dir, "uniqueness.csv", |w| output::write_uniqueness(w, &rows))
        }
        Command::Verify(c) => {
            let (sc, dir) = load(&c)?;
            let report = verify::<f64>(&sc, &dir)?;
            for ch in &report.checks {
                println!("{} {}: {:.3e} (tolerance {:.1e}; {})", if ch.passed { "PASS" } else { "FAIL" }, ch.name, ch.value, ch.tolerance, ch.detail);
            }
            if report.passed() {
                Ok(())
            } else {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(Failure::Property(format!("failed checks: {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
