//! Property suite run by `geoscatter verify`: each check compares a
//! measured quantity against a pinned tolerance and writes its artifacts.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::billiard::{flow, itinerary_metric_scaled, BilliardError, PhasePoint};
use crate::fronts::{build_orthogonal_front, propagate_front, reflect_front, Front, FrontError, REFLECT_EPSILON};
use crate::geodesic::IntegratorOptions;
use crate::output;
use crate::scalar::{lit, to_f64, Real, Vec2};
use crate::scenario::{defaults, FrontSource, FrontsSpec, Scenario, ScenarioError};
use crate::scene::{CurveId, Scene};
use crate::spectra::{compute_spectrum, grad_check, verify_conjugacy, SpectraError};

pub const UNIT_SPEED_TOL: f64 = 1e-9;
pub const UNIT_SPEED_TIME: f64 = 20.0;
pub const UNIT_SPEED_SAMPLES: usize = 24;
pub const GRADIENT_TOL: f64 = 1e-4;
pub const CONJUGACY_TOL: f64 = 1e-6;
pub const BOUNDARY_TOL: f64 = 1e-8;
pub const MONOTONE_SLACK: f64 = 1e-6;
pub const METRIC_TRIPLES: usize = 1000;
/// Harmonics and samples used to re-express an obstacle about a new centre.
pub const RESAMPLE: (usize, usize) = (40, 128);

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Billiard(#[from] BilliardError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error("writing {file}: {message}")]
    Output { file: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), passed: value <= tolerance, value, tolerance, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub(crate) fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, VerifyError> {
    let err = |e: std::io::Error| VerifyError::Output { file: dir.join(name).display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(err)?;
    Ok(BufWriter::new(File::create(dir.join(name)).map_err(err)?))
}

pub(crate) fn csv_err(dir: &Path, name: &str) -> impl Fn(csv::Error) -> VerifyError {
    let file = dir.join(name).display().to_string();
    move |e| VerifyError::Output { file: file.clone(), message: e.to_string() }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Uniformly drawn free phase point inside the bounding curve's disk.
pub fn random_free_point<T: Real>(scene: &Scene<T>, rng: &mut ChaCha8Rng) -> Result<PhasePoint<T>, BilliardError> {
    let c = scene.bounding().center;
    let r = to_f64(scene.bounding().max_radius());
    loop {
        let p = c + Vec2::new(lit(rng.gen_range(-r..r)), lit(rng.gen_range(-r..r)));
        let a = lit::<T>(rng.gen_range(0.0..std::f64::consts::TAU));
        if scene.is_free(p) {
            return Ok(PhasePoint::new(p, scene.chart().unit_at_angle(p, a)?));
        }
    }
}

/// Scene `L`: every obstacle re-expressed as a Fourier series about a
/// shifted centre. It has the same obstacles, hence the same spectrum.
pub fn representation_change<T: Real>(scene: &Scene<T>, shift: [f64; 2]) -> Result<Scene<T>, VerifyError> {
    let mut l = scene.clone();
    for (i, c) in scene.obstacles().iter().enumerate() {
        let d = Vec2::new(lit::<T>(shift[0]), lit::<T>(shift[1])) * c.radius;
        l = l.with_obstacle(i, c.resample_about(c.center + d, RESAMPLE.0, RESAMPLE.1)).map_err(ScenarioError::from)?;
    }
    Ok(l)
}

/// Initial front described by the scenario.
pub fn initial_front<T: Real>(scene: &Scene<T>, spec: &FrontsSpec, opts: &IntegratorOptions<T>) -> Result<Front<T>, FrontError> {
    let n = spec.samples.unwrap_or(defaults::FRONT_SAMPLES);
    let v = |p: [f64; 2]| Vec2::new(lit::<T>(p[0]), lit::<T>(p[1]));
    match spec.source {
        FrontSource::Circle { center, radius } => Front::chart_circle(scene.chart(), v(center), lit(radius), n),
        FrontSource::Point { point, t0, angles } => {
            let [a, b] = angles.unwrap_or([0.0, std::f64::consts::TAU]);
            Front::point_source(scene.chart(), v(point), [lit(a), lit(b)], n, lit(t0), opts)
        }
        FrontSource::Orthogonal { obstacle, arc, lambda } => {
            build_orthogonal_front(scene, CurveId::Obstacle(obstacle), [lit(arc[0]), lit(arc[1])], lit(lambda), n, opts)
        }
    }
}

/// Initial front, one front per propagation step, and the reflected front
/// when requested. Names are the CSV file stems.
pub fn front_sequence<T: Real>(
    scene: &Scene<T>,
    spec: &FrontsSpec,
    max_time: T,
    opts: &IntegratorOptions<T>,
) -> Result<Vec<(String, Front<T>)>, FrontError> {
    let mut seq = vec![("front_000".to_string(), initial_front(scene, spec, opts)?)];
    for (k, &t) in spec.steps.iter().enumerate() {
        let next = propagate_front(scene, &seq.last().expect("non-empty").1, lit(t), opts)?;
        seq.push((format!("front_{:03}", k + 1), next));
    }
    if spec.reflect {
        let r = reflect_front(scene, &seq.last().expect("non-empty").1, lit(REFLECT_EPSILON), max_time, opts)?;
        seq.push(("front_reflected".to_string(), r));
    }
    Ok(seq)
}

fn unit_speed<T: Real>(scene: &Scene<T>, sc: &Scenario) -> Result<Check, VerifyError> {
    let (caps, opts) = (sc.caps::<T>(), sc.integrator::<T>().without_path());
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed());
    let starts = (0..UNIT_SPEED_SAMPLES).map(|_| random_free_point(scene, &mut rng)).collect::<Result<Vec<_>, _>>()?;
    let t = lit::<T>(UNIT_SPEED_TIME).min(caps.max_time);
    let runs: Vec<Option<(f64, f64)>> = starts
        .par_iter()
        .map(|&p| {
            // a trajectory that leaves the chart early is flown for half as long
            let mut s = t;
            for _ in 0..12 {
                if let Ok(out) = flow(scene, p, s, &caps, &opts) {
                    return Some((to_f64(out.max_drift), to_f64(s)));
                }
                s = s * lit(0.5);
            }
            None
        })
        .collect();
    let used: Vec<(f64, f64)> = runs.into_iter().flatten().collect();
    let worst = used.iter().fold(0.0f64, |m, r| m.max(r.0));
    let shortest = used.iter().fold(f64::INFINITY, |m, r| m.min(r.1));
    let detail = format!("{} of {UNIT_SPEED_SAMPLES} trajectories, flown for t in [{shortest}, {}]", used.len(), to_f64(t));
    let mut check = Check::at_most("unit_speed", worst, UNIT_SPEED_TOL, detail);
    check.passed &= used.len() * 2 >= UNIT_SPEED_SAMPLES;
    Ok(check)
}

fn metric_axioms(seed: u64, symbols: usize) -> Check {
    const H: u32 = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut seq = || -> Vec<usize> {
        let n = rng.gen_range(0..=H as usize);
        (0..n).map(|_| rng.gen_range(0..symbols)).collect()
    };
    let mut violations = 0usize;
    for _ in 0..METRIC_TRIPLES {
        let (a, b, c) = (seq(), seq(), seq());
        let d = |x: &[usize], y: &[usize]| itinerary_metric_scaled(x, y, H);
        let ok = d(&a, &a) == 0
            && (d(&a, &b) == 0) == (a == b)
            && d(&a, &b) == d(&b, &a)
            && d(&a, &c) <= d(&a, &b) + d(&b, &c);
        violations += usize::from(!ok);
    }
    Check::at_most("itinerary_metric_axioms", violations as f64, 0.0, format!("{METRIC_TRIPLES} random triples"))
}

fn fronts<T: Real>(scene: &Scene<T>, sc: &Scenario, spec: &FrontsSpec, dir: &Path) -> Result<Vec<Check>, VerifyError> {
    let opts = sc.integrator::<T>();
    let seq = front_sequence(scene, spec, sc.caps::<T>().max_time, &opts)?;
    for (name, f) in &seq {
        let file = format!("{name}.csv");
        output::write_front(create(dir, &file)?, f).map_err(csv_err(dir, &file))?;
    }
    let mut checks = Vec::new();
    let propagated: Vec<&Front<T>> = seq.iter().filter(|(n, _)| n != "front_reflected").map(|(_, f)| f).collect();
    if propagated.len() > 1 && crate::spectra::check_nonpositive_curvature(scene).is_ok() {
        // largest increase of the convexity scalar between consecutive fronts
        let mut worst = f64::NEG_INFINITY;
        for w in propagated.windows(2) {
            for (a, b) in w[0].samples.iter().zip(&w[1].samples) {
                worst = worst.max(to_f64(b.raw - a.raw));
            }
        }
        checks.push(Check { name: "front_convexity_monotone".into(), passed: worst < MONOTONE_SLACK, value: worst, tolerance: MONOTONE_SLACK, detail: format!("{} steps", propagated.len() - 1) });
    }
    if let Some((_, r)) = seq.iter().find(|(n, _)| n == "front_reflected") {
        let worst = r.samples.iter().fold(f64::NEG_INFINITY, |m, s| m.max(to_f64(s.f)));
        checks.push(Check { name: "reflected_front_convex".into(), passed: worst < 0.0, value: worst, tolerance: 0.0, detail: format!("{} samples", r.len()) });
    }
    Ok(checks)
}

/// Runs the suite on `sc` and writes all artifacts into `dir`.
pub fn verify<T: Real>(sc: &Scenario, dir: &Path) -> Result<VerifyReport, VerifyError> {
    let scene = sc.scene::<T>()?;
    let (caps, opts) = (sc.caps::<T>(), sc.integrator::<T>().without_path());
    let grid = sc.grid::<T>();
    let mut checks = vec![unit_speed(&scene, sc)?];

    let spectrum = compute_spectrum(&scene, &grid, &caps, &opts).named(sc.name());
    let again = compute_spectrum(&scene, &grid, &caps, &opts).named(sc.name());
    output::write_spectrum(create(dir, "spectrum.csv")?, &spectrum).map_err(csv_err(dir, "spectrum.csv"))?;
    let differ = spectrum.records.iter().zip(&again.records).filter(|(a, b)| a != b).count();
    checks.push(Check::at_most("spectrum_determinism", differ as f64, 0.0, format!("{} nodes", grid.len())));
    let failed = spectrum.records.iter().filter(|r| r.status == crate::billiard::Status::Failed).count();
    checks.push(Check::at_most("spectrum_failures", failed as f64, 0.0, "records with numerical failures".into()));

    let h = lit::<T>(sc.gradcheck.h.unwrap_or(defaults::GRAD_STEP));
    let eligible: Vec<_> = spectrum.records.iter().filter(|r| r.is_clean_exit()).collect();
    let grads: Vec<_> = eligible.par_iter().map(|r| grad_check(&scene, r, h, &caps, &opts).ok()).collect();
    let rows: Vec<_> = eligible.iter().copied().zip(grads.iter().copied()).collect();
    output::write_gradcheck(create(dir, "gradcheck.csv")?, &rows).map_err(csv_err(dir, "gradcheck.csv"))?;
    let errs: Vec<f64> = grads.iter().flatten().map(|g| to_f64(g.error())).collect();
    let multi = rows.iter().filter(|(r, g)| g.is_some() && r.reflections > 1).count();
    let detail = format!("{} of {} eligible records re-shot, {multi} with several reflections", errs.len(), eligible.len());
    checks.push(match median(errs) {
        Some(m) => Check::at_most("gradient_law_median", m, GRADIENT_TOL, detail),
        None => Check { name: "gradient_law_median".into(), passed: false, value: f64::NAN, tolerance: GRADIENT_TOL, detail },
    });

    let l = representation_change(&scene, sc.conjugacy.shift.unwrap_or([0.1, -0.05]))?;
    let n = sc.conjugacy.samples.unwrap_or(defaults::CONJUGACY_SAMPLES);
    let t_max = lit::<T>(sc.conjugacy.t_max.unwrap_or(defaults::CONJUGACY_T_MAX));
    let rep = verify_conjugacy(&scene, &l, n, t_max, sc.seed(), &caps, &opts)?;
    output::write_conjugacy(create(dir, "conjugacy.csv")?, &rep).map_err(csv_err(dir, "conjugacy.csv"))?;
    checks.push(Check::at_most("conjugacy_residual", to_f64(rep.max_residual), CONJUGACY_TOL, format!("{n} pairs, {} draws rejected", rep.rejected)));
    checks.push(Check::at_most("conjugacy_boundary_identity", to_f64(rep.boundary_max), BOUNDARY_TOL, format!("{n} boundary points")));

    checks.push(metric_axioms(sc.seed(), scene.obstacles().len().max(2)));
    if let Some(spec) = &sc.fronts {
        checks.extend(fronts(&scene, sc, spec, dir)?);
    }
    let report = VerifyReport { scenario: sc.name().to_string(), checks };
    let mut w = create(dir, "verify.json")?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| VerifyError::Output { file: "verify.json".into(), message: e.to_string() })?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| VerifyError::Output { file: "verify.json".into(), message: e.to_string() })?;
    Ok(report)
}
