//! Generalised geodesic flow in the exterior of the obstacles.

mod symbolic;

pub use symbolic::{
    itinerary, itinerary_metric, itinerary_metric_scaled, period_two_orbit, phase_distance, separation_fit,
    separation_probe, LinearFit, PeriodicOrbit, SeparationSample,
};

use std::fmt;

use crate::geodesic::{GeodesicState, IntegrationError, IntegratorOptions};
use crate::scene::{CurveId, HitEvent, Scene, SceneError};
use crate::scalar::{lit, to_f64, Real, Vec2};

/// Unit phase-space point: position and unit velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint<T> {
    pub position: Vec2<T>,
    pub direction: Vec2<T>,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(position: Vec2<T>, direction: Vec2<T>) -> Self {
        Self { position, direction }
    }

    pub fn flipped(self) -> Self {
        Self { direction: -self.direction, ..self }
    }

    pub fn state(self, time: T) -> GeodesicState<T> {
        GeodesicState::new(self.position, self.direction, time)
    }
}

impl<T: Real> From<GeodesicState<T>> for PhasePoint<T> {
    fn from(s: GeodesicState<T>) -> Self {
        Self::new(s.position, s.velocity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Caps<T> {
    pub max_time: T,
    pub max_reflections: usize,
}

impl<T: Real> Default for Caps<T> {
    fn default() -> Self {
        Self { max_time: lit(200.0), max_reflections: 10_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Exited,
    TrappedTime,
    TrappedReflections,
    ChartExit,
    /// Numerical failure while computing the trajectory.
    Failed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Exited => "exited",
            Status::TrappedTime => "trapped_time",
            Status::TrappedReflections => "trapped_reflections",
            Status::ChartExit => "chart_exit",
            Status::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BilliardError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("more than {cap} reflections before t = {time}")]
    ReflectionCap { cap: usize, time: f64 },
    #[error("launch direction is not strictly inward (incidence {incidence})")]
    NotInward { incidence: f64 },
    #[error("trajectory left the chart at t = {time}")]
    ChartExit { time: f64 },
}

impl From<crate::manifold::GeometryError> for BilliardError {
    fn from(e: crate::manifold::GeometryError) -> Self {
        BilliardError::Scene(SceneError::Geometry(e))
    }
}

/// Piecewise-geodesic trajectory from its initial point to exit or a cap.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord<T> {
    pub initial: PhasePoint<T>,
    /// Reflections, tangential contacts and the final bounding crossing.
    pub hits: Vec<HitEvent<T>>,
    /// Length of each geodesic piece between consecutive events.
    pub durations: Vec<T>,
    pub final_point: PhasePoint<T>,
    pub time: T,
    pub status: Status,
    pub tangent: bool,
    /// Obstacle indices in reflection order.
    pub itinerary: Vec<usize>,
    /// Exit parameter on the bounding curve when `status == Exited`.
    pub exit_param: Option<T>,
    pub max_drift: T,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn reflections(&self) -> usize {
        self.itinerary.len()
    }

    /// Status label used in tables, with a `+tangent` suffix when flagged.
    pub fn status_label(&self) -> String {
        if self.tangent {
            format!("{}+tangent", self.status)
        } else {
            self.status.to_string()
        }
    }

    /// Obstacle reflections only.
    pub fn reflection_events(&self) -> impl Iterator<Item = &HitEvent<T>> {
        self.hits.iter().filter(|h| matches!(h.curve, CurveId::Obstacle(_)) && !h.tangent)
    }
}

/// Outcome of a finite-time flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOutcome<T> {
    pub point: PhasePoint<T>,
    pub tangent: bool,
    pub reflections: usize,
    /// Largest `| |v|_g - 1 |` of any step before its projection.
    pub max_drift: T,
}

/// `F_t(p)`: geodesic motion with specular reflection at obstacles. The
/// bounding curve is transparent. Negative `t` runs the reversed point.
pub fn flow<T: Real>(
    scene: &Scene<T>,
    p: PhasePoint<T>,
    t: T,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<FlowOutcome<T>, BilliardError> {
    if t < T::zero() {
        let mut out = flow(scene, p.flipped(), -t, caps, opts)?;
        out.point = out.point.flipped();
        return Ok(out);
    }
    let opts = opts.without_path();
    let mut s = p.state(T::zero());
    let mut graze = None;
    let mut out = FlowOutcome { point: p, tangent: false, reflections: 0, max_drift: T::zero() };
    while s.time < t {
        let leg = scene.advance(s, t, false, graze.take(), &opts)?;
        out.max_drift = out.max_drift.max(leg.max_drift);
        if leg.chart_exit {
            return Err(BilliardError::ChartExit { time: to_f64(leg.end.time) });
        }
        s = leg.end;
        let Some(hit) = leg.hit else { break };
        let CurveId::Obstacle(k) = hit.curve else { unreachable!("bounding crossings are not events here") };
        if hit.tangent {
            out.tangent = true;
            graze = Some(k);
            continue;
        }
        s.velocity = scene.reflect(&hit, s.velocity)?;
        out.reflections += 1;
        if out.reflections > caps.max_reflections {
            return Err(BilliardError::ReflectionCap { cap: caps.max_reflections, time: to_f64(s.time) });
        }
    }
    out.point = s.into();
    Ok(out)
}

/// Follows `p` until it leaves S through the bounding curve or a cap fires.
pub fn trace<T: Real>(
    scene: &Scene<T>,
    p: PhasePoint<T>,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<TrajectoryRecord<T>, BilliardError> {
    let opts = opts.without_path();
    let mut rec = TrajectoryRecord {
        initial: p,
        hits: Vec::new(),
        durations: Vec::new(),
        final_point: p,
        time: T::zero(),
        status: Status::TrappedTime,
        tangent: false,
        itinerary: Vec::new(),
        exit_param: None,
        max_drift: T::zero(),
    };
    let mut s = p.state(T::zero());
    let mut graze = None;
    loop {
        // each piece starts its own clock so durations are exact leg lengths
        let remaining = caps.max_time - rec.time;
        if remaining <= T::zero() {
            rec.status = Status::TrappedTime;
            break;
        }
        let leg = scene.advance(GeodesicState { time: T::zero(), ..s }, remaining, true, graze.take(), &opts)?;
        rec.max_drift = rec.max_drift.max(leg.max_drift);
        rec.durations.push(leg.end.time);
        rec.time = rec.durations.iter().fold(T::zero(), |a, &d| a + d);
        s = leg.end;
        if leg.chart_exit {
            rec.status = Status::ChartExit;
            break;
        }
        let Some(mut hit) = leg.hit else {
            rec.status = Status::TrappedTime;
            break;
        };
        hit.time = rec.time;
        rec.hits.push(hit);
        match hit.curve {
            CurveId::Bounding => {
                rec.status = Status::Exited;
                rec.tangent |= hit.tangent;
                rec.exit_param = Some(hit.u);
                break;
            }
            CurveId::Obstacle(k) if hit.tangent => {
                rec.tangent = true;
                graze = Some(k);
            }
            CurveId::Obstacle(k) => {
                s.velocity = scene.reflect(&hit, s.velocity)?;
                rec.itinerary.push(k);
                if rec.itinerary.len() >= caps.max_reflections {
                    rec.status = Status::TrappedReflections;
                    break;
                }
            }
        }
    }
    rec.final_point = s.into();
    Ok(rec)
}

/// Launch point and inward unit direction at bounding parameter `x` with
/// angle `theta` from the inward normal, positive toward the curve tangent.
pub fn boundary_launch<T: Real>(scene: &Scene<T>, x: T, theta: T) -> Result<PhasePoint<T>, BilliardError> {
    let p = scene.bounding().point(x);
    let nu = scene.unit_normal(CurveId::Bounding, x)?;
    let tau = scene.unit_tangent(CurveId::Bounding, x)?;
    Ok(PhasePoint::new(p, -nu * theta.cos() + tau * theta.sin()))
}

/// Angle of a unit direction at bounding parameter `u` relative to the
/// outward normal, positive toward the curve tangent.
pub fn boundary_angle<T: Real>(scene: &Scene<T>, u: T, at: Vec2<T>, dir: Vec2<T>) -> Result<T, BilliardError> {
    let chart = scene.chart();
    let nu = scene.unit_normal_at(CurveId::Bounding, u, at)?;
    let c = scene.bounding().tangent(u);
    let tau = c / chart.norm(at, c)?;
    Ok(chart.inner(at, dir, tau)?.atan2(chart.inner(at, dir, nu)?))
}

/// Travelling-time record for the trajectory entering S at bounding
/// parameter `x` with inward unit direction `omega`.
pub fn shoot_from_boundary<T: Real>(
    scene: &Scene<T>,
    x: T,
    omega: Vec2<T>,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<TrajectoryRecord<T>, BilliardError> {
    let p = scene.bounding().point(x);
    let nu = scene.unit_normal(CurveId::Bounding, x)?;
    let incidence = scene.chart().inner(p, omega, nu)?;
    if !(incidence < -scene.tangency()) {
        return Err(BilliardError::NotInward { incidence: to_f64(incidence) });
    }
    trace(scene, PhasePoint::new(p, omega), caps, opts)
}
