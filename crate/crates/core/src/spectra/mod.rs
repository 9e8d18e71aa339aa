//! Travelling-time spectra, the gradient law, spectrum comparison, the
//! conjugacy map and the uniqueness sweep.

mod conjugacy;
mod gradient;
mod uniqueness;

pub use conjugacy::{conjugacy_map, verify_conjugacy, ConjugacyReport, ConjugacySample};
pub use gradient::{grad_check, GradCheck};
pub use uniqueness::{check_nonpositive_curvature, uniqueness_experiment, UniquenessRow};

use rayon::prelude::*;

use crate::billiard::{boundary_angle, boundary_launch, shoot_from_boundary, BilliardError, Caps, Status, TrajectoryRecord};
use crate::geodesic::IntegratorOptions;
use crate::scalar::{lit, to_f64, Real};
use crate::scene::{Scene, SceneError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectraError {
    #[error(transparent)]
    Billiard(#[from] BilliardError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("grids differ: {a} vs {b}")]
    GridMismatch { a: String, b: String },
    #[error("record at x = {x}, theta = {theta} did not exit cleanly")]
    NotEligible { x: f64, theta: f64 },
    #[error("re-shooting could not hold the exit point fixed (drift {drift})")]
    Reshoot { drift: f64 },
    #[error("trajectory is tangent to an obstacle")]
    Tangent,
    #[error("trajectory from ({x}, {y}) is trapped")]
    Trapped { x: f64, y: f64 },
    #[error("Gauss curvature {k} > 0 at ({x}, {y})")]
    PositiveCurvature { x: f64, y: f64, k: f64 },
}

impl From<crate::manifold::GeometryError> for SpectraError {
    fn from(e: crate::manifold::GeometryError) -> Self {
        SpectraError::Scene(SceneError::Geometry(e))
    }
}

/// Product grid of boundary parameters and inward launch angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumGrid<T> {
    pub nx: usize,
    pub ntheta: usize,
    /// Angles stay within `(-pi/2 + delta, pi/2 - delta)`.
    pub delta: T,
}

impl<T: Real> SpectrumGrid<T> {
    pub fn new(nx: usize, ntheta: usize) -> Self {
        Self { nx, ntheta, delta: lit(1e-2) }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> T {
        lit::<T>(i as f64) / lit(self.nx as f64)
    }

    /// Midpoints of `ntheta` equal cells of the open angle interval.
    pub fn theta(&self, j: usize) -> T {
        let half = T::FRAC_PI_2() - self.delta;
        -half + (half + half) * lit::<T>((j as f64 + 0.5) / self.ntheta as f64)
    }

    fn describe(&self) -> String {
        format!("{}x{} (delta {})", self.nx, self.ntheta, self.delta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRecord<T> {
    pub x: T,
    /// Launch angle from the inward normal, positive toward the tangent.
    pub theta: T,
    /// Exit parameter on the bounding curve.
    pub y: Option<T>,
    /// Exit angle from the outward normal at `y`.
    pub exit_theta: Option<T>,
    pub time: T,
    pub reflections: usize,
    pub itinerary: Vec<usize>,
    pub status: Status,
    pub tangent: bool,
}

impl<T: Real> SpectrumRecord<T> {
    pub fn status_label(&self) -> String {
        if self.tangent {
            format!("{}+tangent", self.status)
        } else {
            self.status.to_string()
        }
    }

    /// Exited without tangential contact.
    pub fn is_clean_exit(&self) -> bool {
        self.status == Status::Exited && !self.tangent
    }

    fn from_trace(scene: &Scene<T>, x: T, theta: T, rec: &TrajectoryRecord<T>) -> Self {
        let exit_theta = rec
            .exit_param
            .and_then(|y| boundary_angle(scene, y, rec.final_point.position, rec.final_point.direction).ok());
        Self {
            x,
            theta,
            y: rec.exit_param,
            exit_theta,
            time: rec.time,
            reflections: rec.reflections(),
            itinerary: rec.itinerary.clone(),
            status: rec.status,
            tangent: rec.tangent,
        }
    }

    fn failed(x: T, theta: T) -> Self {
        Self { x, theta, y: None, exit_theta: None, time: T::zero(), reflections: 0, itinerary: Vec::new(), status: Status::Failed, tangent: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub scene_id: String,
    pub grid: SpectrumGrid<T>,
    /// Row-major in `x` then `theta`.
    pub records: Vec<SpectrumRecord<T>>,
    pub caps: Caps<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn named(mut self, id: impl Into<String>) -> Self {
        self.scene_id = id.into();
        self
    }
}

/// Launches the trajectory at boundary parameter `x` and angle `theta`.
pub fn shoot_at<T: Real>(
    scene: &Scene<T>,
    x: T,
    theta: T,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<TrajectoryRecord<T>, BilliardError> {
    let p = boundary_launch(scene, x, theta)?;
    shoot_from_boundary(scene, x, p.direction, caps, opts)
}

/// One record per grid node; failures are kept as `failed` rows.
pub fn compute_spectrum<T: Real>(
    scene: &Scene<T>,
    grid: &SpectrumGrid<T>,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Spectrum<T> {
    let records = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (x, theta) = (grid.x(k / grid.ntheta), grid.theta(k % grid.ntheta));
            match shoot_at(scene, x, theta, caps, opts) {
                Ok(rec) => SpectrumRecord::from_trace(scene, x, theta, &rec),
                Err(_) => SpectrumRecord::failed(x, theta),
            }
        })
        .collect();
    Spectrum { scene_id: String::new(), grid: *grid, records, caps: *caps }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison<T> {
    pub sup_dev: T,
    pub mean_dev: T,
    /// Fraction of nodes whose statuses differ.
    pub unmatched: T,
    /// Nodes where both records exited.
    pub compared: usize,
}

impl<T: Real> Comparison<T> {
    /// The finite-grid reading of "almost the same travelling times".
    pub fn almost_same(&self, sup_tol: T, unmatched_tol: T) -> bool {
        self.sup_dev <= sup_tol && self.unmatched <= unmatched_tol
    }
}

/// Node-by-node comparison of two spectra on the same grid.
pub fn compare_spectra<T: Real>(a: &Spectrum<T>, b: &Spectrum<T>) -> Result<Comparison<T>, SpectraError> {
    if a.grid != b.grid || a.records.len() != b.records.len() {
        return Err(SpectraError::GridMismatch { a: a.grid.describe(), b: b.grid.describe() });
    }
    let (mut sup, mut sum, mut compared, mut unmatched) = (T::zero(), T::zero(), 0usize, 0usize);
    for (ra, rb) in a.records.iter().zip(&b.records) {
        if ra.status != rb.status || ra.tangent != rb.tangent {
            unmatched += 1;
            continue;
        }
        if ra.status == Status::Exited {
            let d = (ra.time - rb.time).abs();
            sup = sup.max(d);
            sum = sum + d;
            compared += 1;
        }
    }
    let n = a.records.len().max(1);
    Ok(Comparison {
        sup_dev: sup,
        mean_dev: if compared == 0 { T::zero() } else { sum / lit(compared as f64) },
        unmatched: lit::<T>(unmatched as f64) / lit(n as f64),
        compared,
    })
}

pub(crate) fn not_eligible<T: Real>(r: &SpectrumRecord<T>) -> SpectraError {
    SpectraError::NotEligible { x: to_f64(r.x), theta: to_f64(r.theta) }
}
