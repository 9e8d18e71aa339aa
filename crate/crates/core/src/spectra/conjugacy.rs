use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SpectraError;
use crate::billiard::{boundary_launch, flow, trace, Caps, PhasePoint, Status};
use crate::geodesic::IntegratorOptions;
use crate::scalar::{lit, to_f64, Real, Vec2};
use crate::scene::{CurveId, Scene};

/// Extra time flown past the exit through the bounding curve.
const EXIT_MARGIN: f64 = 0.05;

fn checked_flow<T: Real>(
    scene: &Scene<T>,
    p: PhasePoint<T>,
    t: T,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<PhasePoint<T>, SpectraError> {
    let out = flow(scene, p, t, caps, opts)?;
    if out.tangent {
        return Err(SpectraError::Tangent);
    }
    Ok(out.point)
}

/// `F^L_{-t} F^K_t (p)`.
pub fn conjugacy_map<T: Real>(
    scene_k: &Scene<T>,
    scene_l: &Scene<T>,
    p: PhasePoint<T>,
    t_exit: T,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<PhasePoint<T>, SpectraError> {
    let out = checked_flow(scene_k, p, t_exit, caps, opts)?;
    checked_flow(scene_l, out, -t_exit, caps, opts)
}

/// Time after which `F^K` has carried `p` out through the bounding curve.
fn exit_time<T: Real>(scene: &Scene<T>, p: PhasePoint<T>, caps: &Caps<T>, opts: &IntegratorOptions<T>) -> Result<T, SpectraError> {
    let rec = trace(scene, p, caps, opts)?;
    if rec.tangent {
        return Err(SpectraError::Tangent);
    }
    if rec.status != Status::Exited {
        return Err(SpectraError::Trapped { x: to_f64(p.position.x), y: to_f64(p.position.y) });
    }
    Ok(rec.time + lit(EXIT_MARGIN))
}

/// `Phi(p)` with the exit time chosen from `p`'s own trajectory.
fn phi<T: Real>(k: &Scene<T>, l: &Scene<T>, p: PhasePoint<T>, caps: &Caps<T>, opts: &IntegratorOptions<T>) -> Result<PhasePoint<T>, SpectraError> {
    let t = exit_time(k, p, caps, opts)?;
    conjugacy_map(k, l, p, t, caps, opts)
}

fn gap<T: Real>(a: &PhasePoint<T>, b: &PhasePoint<T>) -> T {
    (a.position - b.position).norm().max((a.direction - b.direction).norm())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjugacySample<T> {
    pub p: PhasePoint<T>,
    pub t: T,
    /// Chart distance between `F^L_t(Phi(p))` and `Phi(F^K_t(p))`.
    pub residual: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyReport<T> {
    pub samples: Vec<ConjugacySample<T>>,
    pub max_residual: T,
    /// Largest `|Phi(p) - p|` over outward boundary phase points.
    pub boundary_max: T,
    /// Largest travelling-time difference between `p` in K and `Phi(p)` in L
    /// over inward boundary phase points.
    pub time_max: T,
    /// Random draws rejected as trapped or tangent.
    pub rejected: usize,
}

/// Evaluates the conjugacy relation on `n` random interior phase points with
/// `t` in `[0, t_max]`, plus the boundary identity and time preservation on
/// `n` boundary points.
pub fn verify_conjugacy<T: Real>(
    scene_k: &Scene<T>,
    scene_l: &Scene<T>,
    n: usize,
    t_max: T,
    seed: u64,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<ConjugacyReport<T>, SpectraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chart = scene_k.chart();
    let reach = to_f64(scene_k.bounding().max_radius());
    let c = scene_k.bounding().center;
    let mut samples = Vec::with_capacity(n);
    let mut rejected = 0;
    while samples.len() < n {
        if rejected > 100 * n.max(1) {
            return Err(SpectraError::Trapped { x: f64::NAN, y: f64::NAN });
        }
        let pos = c + Vec2::new(lit(rng.gen_range(-reach..reach)), lit(rng.gen_range(-reach..reach)));
        let angle = lit::<T>(rng.gen_range(0.0..std::f64::consts::TAU));
        let t = t_max * lit(rng.gen::<f64>());
        if !scene_k.is_free(pos) || !scene_l.is_free(pos) {
            continue;
        }
        let p = PhasePoint::new(pos, chart.unit_at_angle(pos, angle)?);
        let attempt = (|| {
            let lhs = checked_flow(scene_l, phi(scene_k, scene_l, p, caps, opts)?, t, caps, opts)?;
            let q = checked_flow(scene_k, p, t, caps, opts)?;
            let rhs = phi(scene_k, scene_l, q, caps, opts)?;
            Ok::<_, SpectraError>(gap(&lhs, &rhs))
        })();
        match attempt {
            Ok(residual) => samples.push(ConjugacySample { p, t, residual }),
            Err(SpectraError::Tangent | SpectraError::Trapped { .. }) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    let (mut boundary_max, mut time_max) = (T::zero(), T::zero());
    for i in 0..n {
        let x = lit::<T>(rng.gen::<f64>());
        let theta = lit::<T>(rng.gen_range(-1.4..1.4));
        let inward = boundary_launch(scene_k, x, theta)?;
        // outward boundary points: the normal itself, or a reversed launch
        let probe = if i % 2 == 0 {
            PhasePoint::new(inward.position, scene_k.unit_normal(CurveId::Bounding, x)?)
        } else {
            inward.flipped()
        };
        let img = conjugacy_map(scene_k, scene_l, probe, lit(1.0), caps, opts)?;
        boundary_max = boundary_max.max(gap(&img, &probe));
        let (Ok(rk), Ok(img)) = (trace(scene_k, inward, caps, opts), phi(scene_k, scene_l, inward, caps, opts)) else {
            continue;
        };
        let rl = trace(scene_l, img, caps, opts)?;
        if rk.status == Status::Exited && rl.status == Status::Exited && !rk.tangent && !rl.tangent {
            time_max = time_max.max((rk.time - rl.time).abs());
        }
    }
    let max_residual = samples.iter().fold(T::zero(), |m, s| m.max(s.residual));
    Ok(ConjugacyReport { samples, max_residual, boundary_max, time_max, rejected })
}
