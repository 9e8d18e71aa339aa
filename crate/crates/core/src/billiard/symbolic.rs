//! Reflection itineraries and the product metric on symbol sequences.

use super::{trace, BilliardError, Caps, PhasePoint, TrajectoryRecord};
use crate::geodesic::{bracketed_root, IntegratorOptions};
use crate::manifold::MetricChart;
use crate::scene::{CurveId, Scene, SceneError};
use crate::scalar::{lit, to_f64, Real};

/// First `n` obstacle indices of the record (all of them if fewer).
pub fn itinerary<T: Real>(record: &TrajectoryRecord<T>, n: usize) -> Vec<usize> {
    record.itinerary.iter().take(n).copied().collect()
}

/// Beyond this many symbols past the first disagreement the terms are
/// below `f64` resolution.
const WINDOW: usize = 70;

/// `rho(a, b) = sum_i 3^-i delta(a_i, b_i)` (1-based `i`). A finite
/// sequence is read as continuing with a filler symbol that depends only
/// on its length: equal-length sequences agree past their end, sequences
/// of different lengths disagree past the shorter one.
pub fn itinerary_metric(a: &[usize], b: &[usize]) -> f64 {
    if a == b {
        return 0.0;
    }
    let f = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[f..], &b[f..]);
    let h = a.len().max(b.len()).min(WINDOW);
    let scaled = scaled_sum(a, b, h as u32);
    let den = 2.0 * 3f64.powi(h as i32);
    3f64.powi(-(f as i32)) * (scaled as f64 / den)
}

/// `rho(a, b) * 2 * 3^horizon` as an exact integer; requires
/// `horizon >= max(len)` and `horizon <= 79`.
pub fn itinerary_metric_scaled(a: &[usize], b: &[usize], horizon: u32) -> u128 {
    assert!(horizon as usize >= a.len().max(b.len()), "horizon shorter than the sequences");
    assert!(horizon <= 79, "horizon exceeds exact integer range");
    if a == b {
        return 0;
    }
    scaled_sum(a, b, horizon)
}

fn scaled_sum(a: &[usize], b: &[usize], h: u32) -> u128 {
    let m = a.len().min(b.len());
    let mut acc: u128 = 0;
    for i in 1..=m.min(h as usize) {
        if a[i - 1] != b[i - 1] {
            acc += 2 * 3u128.pow(h - i as u32);
        }
    }
    if a.len() != b.len() && m < h as usize {
        // sum_{i > m} 3^-i = 3^-m / 2
        acc += 3u128.pow(h - m as u32);
    }
    acc
}

/// Distance on the unit tangent bundle: metric displacement of the base
/// points combined with the angle between the directions.
pub fn phase_distance<T: Real>(chart: &MetricChart<T>, p: &PhasePoint<T>, q: &PhasePoint<T>) -> T {
    let mid = (p.position + q.position) * lit::<T>(0.5);
    let scale = chart.scale(mid).unwrap_or_else(|_| T::one());
    let dx = (p.position - q.position).norm() * scale;
    let da = p.direction.cross(q.direction).atan2(p.direction.dot(q.direction));
    dx.hypot(da)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationSample<T> {
    /// Length of the longest common itinerary prefix (at most `n`).
    pub prefix: usize,
    pub distance: T,
}

/// Shared itinerary prefix (up to `n` reflections) and phase distance of
/// two points.
pub fn separation_probe<T: Real>(
    scene: &Scene<T>,
    p: PhasePoint<T>,
    q: PhasePoint<T>,
    n: usize,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<SeparationSample<T>, BilliardError> {
    let caps = Caps { max_reflections: n.min(caps.max_reflections).max(1), ..*caps };
    let distance = phase_distance(scene.chart(), &p, &q);
    let rp = trace(scene, p, &caps, opts)?;
    let rq = if p == q { rp.clone() } else { trace(scene, q, &caps, opts)? };
    for r in [&rp, &rq] {
        if r.tangent {
            return Err(SceneError::Tangential { curve: "obstacle".into() }.into());
        }
    }
    let prefix = rp.itinerary.iter().zip(&rq.itinerary).take(n).take_while(|(a, b)| a == b).count();
    Ok(SeparationSample { prefix, distance })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares fit of `ln(distance)` against the shared prefix length,
/// over samples whose prefix lies in `[lo, hi]`.
pub fn separation_fit<T: Real>(samples: &[SeparationSample<T>], lo: usize, hi: usize) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.prefix >= lo && s.prefix <= hi && s.distance > T::zero())
        .map(|s| (s.prefix as f64, to_f64(s.distance).ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 3 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r2, points: pts.len() })
}

/// Period-two orbit bouncing between obstacles `i` and `j` along their
/// common perpendicular geodesic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicOrbit<T> {
    /// Point on obstacle `i` leaving along its outward normal.
    pub start: PhasePoint<T>,
    pub period: T,
    pub u_i: T,
    pub u_j: T,
}

/// Finds the common perpendicular of obstacles `i` and `j` by bisection on
/// the launch parameter along `i`: the normal geodesic from `i` must arrive
/// at `j` with zero tangential component.
pub fn period_two_orbit<T: Real>(
    scene: &Scene<T>,
    i: usize,
    j: usize,
    opts: &IntegratorOptions<T>,
) -> Result<PeriodicOrbit<T>, BilliardError> {
    let (ci, cj) = (&scene.obstacles()[i], &scene.obstacles()[j]);
    let opts = opts.without_path();
    let shoot = |u: T| -> Result<Option<(T, T, T)>, BilliardError> {
        let p = ci.point(u);
        let nu = scene.unit_normal(CurveId::Obstacle(i), u)?;
        let leg = scene.advance(PhasePoint::new(p, nu).state(T::zero()), lit(1e3), true, None, &opts)?;
        match leg.hit {
            Some(h) if h.curve == CurveId::Obstacle(j) => {
                let tau = scene.unit_tangent(CurveId::Obstacle(j), h.u)?;
                Ok(Some((scene.chart().inner(h.point, h.velocity, tau)?, h.time, h.u)))
            }
            _ => Ok(None),
        }
    };
    let u0 = ci.param_of(cj.center);
    let n = 64;
    let us: Vec<T> = (0..=n).map(|k| u0 + lit::<T>(0.5 * (k as f64 / n as f64 - 0.5))).collect();
    let vals = us.iter().map(|&u| shoot(u)).collect::<Result<Vec<_>, _>>()?;
    let not_found = || BilliardError::Scene(SceneError::Tangential { curve: format!("no perpendicular between obstacles[{i}] and obstacles[{j}]") });
    let k = (0..n)
        .filter(|&k| matches!((vals[k], vals[k + 1]), (Some(a), Some(b)) if (a.0 > T::zero()) != (b.0 > T::zero())))
        .min_by(|&a, &b| {
            let d = |k: usize| (us[k] - u0).abs();
            d(a).partial_cmp(&d(b)).unwrap()
        })
        .ok_or_else(not_found)?;
    let (fa, fb) = (vals[k].unwrap().0, vals[k + 1].unwrap().0);
    // orient so that the bracket has f(a) > 0 >= f(b)
    let sign = if fa > T::zero() { T::one() } else { -T::one() };
    let g = |u: T| -> Result<T, BilliardError> { Ok(shoot(u)?.map_or(sign * fb, |v| sign * v.0)) };
    let (u_star, _) = bracketed_root(g, us[k], sign * fa, us[k + 1], sign * fb, lit(1e-13))?;
    let (_, len, u_j) = shoot(u_star)?.ok_or_else(not_found)?;
    let start = PhasePoint::new(ci.point(u_star), scene.unit_normal(CurveId::Obstacle(i), u_star)?);
    let wrap = |u: T| u - u.floor();
    Ok(PeriodicOrbit { start, period: len + len, u_i: wrap(u_star), u_j })
}
