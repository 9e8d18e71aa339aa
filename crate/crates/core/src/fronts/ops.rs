use rayon::prelude::*;

use super::{Front, FrontError, Provenance, STENCIL};
use crate::geodesic::{GeodesicState, IntegratorOptions};
use crate::scalar::{lit, to_f64, Real, Vec2};
use crate::scene::{CurveId, HitEvent, Scene};

/// Default time travelled after the last sample reflects.
pub const REFLECT_EPSILON: f64 = 1e-3;

/// Geodesic flight for signed time `t` that must not meet an obstacle.
/// `leaving` names an obstacle the flight starts on.
fn fly<T: Real>(
    scene: &Scene<T>,
    index: usize,
    p: Vec2<T>,
    dir: Vec2<T>,
    t: T,
    leaving: Option<usize>,
    opts: &IntegratorOptions<T>,
) -> Result<GeodesicState<T>, FrontError> {
    if t == T::zero() {
        return Ok(GeodesicState::new(p, dir, T::zero()));
    }
    let flip = t < T::zero();
    let s0 = GeodesicState::new(p, if flip { -dir } else { dir }, T::zero());
    let leg = scene.advance(s0, t.abs(), false, leaving, &opts.without_path())?;
    if leg.chart_exit {
        return Err(FrontError::LeftRegion { index });
    }
    if let Some(HitEvent { curve: CurveId::Obstacle(obstacle), time, .. }) = leg.hit {
        return Err(FrontError::Collision { index, obstacle, time: to_f64(time) });
    }
    Ok(if flip { leg.end.flipped() } else { leg.end })
}

/// Five-point Gauss-Legendre rule on `panels` equal panels of `[a, b]`.
fn gauss<T: Real>(f: &impl Fn(T) -> Result<T, FrontError>, a: T, b: T, panels: usize) -> Result<T, FrontError> {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = (b - a) / lit(panels as f64);
    let half = h * lit(0.5);
    let mut acc = T::zero();
    for k in 0..panels {
        let mid = a + h * lit(k as f64 + 0.5);
        for (x, w) in X.iter().zip(W) {
            acc = acc + f(mid + half * lit(*x))? * lit(w);
        }
    }
    Ok(acc * half)
}

/// Orthogonal front `y(s, lambda - s)`: geodesics leave the arc `u` in
/// `[arc0, arc1]` of curve `id` along its unit tangent, the sample at arc
/// length `s` travelling for `lambda - s`. The tangent geodesics become the
/// normal field and the front is parametrised by `s`.
pub fn build_orthogonal_front<T: Real>(
    scene: &Scene<T>,
    id: CurveId,
    arc: [T; 2],
    lambda: T,
    n: usize,
    opts: &IntegratorOptions<T>,
) -> Result<Front<T>, FrontError> {
    if n < STENCIL {
        return Err(FrontError::TooFewSamples { n });
    }
    let chart = scene.chart();
    let curve = scene.curve(id);
    let speed = |u: T| -> Result<T, FrontError> { Ok(chart.norm(curve.point(u), curve.tangent(u))?) };
    // cumulative arc length on a fine table, then Newton for each sample
    let m = 256;
    let du = (arc[1] - arc[0]) / lit(m as f64);
    let mut table = vec![T::zero(); m + 1];
    for k in 0..m {
        let a = arc[0] + du * lit(k as f64);
        table[k + 1] = table[k] + gauss(&speed, a, a + du, 1)?;
    }
    let length = table[m];
    let arc_at = |u: T| -> Result<T, FrontError> {
        let k = (((u - arc[0]) / du).floor().to_usize().unwrap_or(0)).min(m - 1);
        let a = arc[0] + du * lit(k as f64);
        Ok(table[k] + gauss(&speed, a, u, 1)?)
    };
    let ss: Vec<T> = (0..n).map(|i| length * lit::<T>(i as f64 / (n - 1) as f64)).collect();
    let us = ss
        .iter()
        .map(|&s| {
            let k = table.partition_point(|&x| x <= s).clamp(1, m);
            let mut u = arc[0] + du * (lit::<T>((k - 1) as f64) + (s - table[k - 1]) / (table[k] - table[k - 1]));
            for _ in 0..20 {
                let step = (arc_at(u)? - s) / speed(u)?;
                u = u - step;
                if step.abs() <= T::epsilon() * lit(4.0) {
                    break;
                }
            }
            Ok(u)
        })
        .collect::<Result<Vec<T>, FrontError>>()?;
    let out: Vec<GeodesicState<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = curve.point(us[i]);
            let c1 = curve.tangent(us[i]);
            let tau = c1 / chart.norm(p, c1)?;
            let leaving = match id {
                CurveId::Obstacle(k) => Some(k),
                CurveId::Bounding => None,
            };
            let s = fly(scene, i, p, tau, lambda - ss[i], leaving, opts)?;
            if !scene.is_free(s.position) {
                return Err(FrontError::LeftRegion { index: i });
            }
            Ok(s)
        })
        .collect::<Result<_, _>>()?;
    let pts: Vec<Vec2<T>> = out.iter().map(|s| s.position).collect();
    let nrm: Vec<Vec2<T>> = out.iter().map(|s| s.velocity).collect();
    let front = Front::from_parts(chart, &ss, &pts, &nrm, None, Provenance::Constructed)?;
    front.check_convex()?;
    Ok(front)
}

/// Moves every sample along its normal geodesic for time `t`.
pub fn propagate_front<T: Real>(
    scene: &Scene<T>,
    front: &Front<T>,
    t: T,
    opts: &IntegratorOptions<T>,
) -> Result<Front<T>, FrontError> {
    if t == T::zero() {
        return Ok(front.clone());
    }
    let opts = opts.without_path();
    let out: Vec<GeodesicState<T>> = front
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| fly(scene, i, s.point, s.normal, t, None, &opts))
        .collect::<Result<_, _>>()?;
    let pts: Vec<Vec2<T>> = out.iter().map(|s| s.position).collect();
    let nrm: Vec<Vec2<T>> = out.iter().map(|s| s.velocity).collect();
    let elapsed = match front.provenance {
        Provenance::Propagated(t0) => t0 + t,
        _ => t,
    };
    Front::rebuild(scene.chart(), front, &pts, &nrm, Provenance::Propagated(elapsed))
}

/// First obstacle contact of each sample's normal geodesic within `t_max`.
fn first_contacts<T: Real>(
    scene: &Scene<T>,
    front: &Front<T>,
    t_max: T,
    opts: &IntegratorOptions<T>,
) -> Result<Vec<Option<HitEvent<T>>>, FrontError> {
    let opts = opts.without_path();
    front
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let leg = scene.advance(GeodesicState::new(s.point, s.normal, T::zero()), t_max, false, None, &opts)?;
            if leg.chart_exit {
                return Err(FrontError::LeftRegion { index: i });
            }
            Ok(leg.hit)
        })
        .collect()
}

/// Reflects a front whose samples all meet the same obstacle transversally.
/// Every sample is flown to the common time `max t(u) + eps`.
pub fn reflect_front<T: Real>(
    scene: &Scene<T>,
    front: &Front<T>,
    eps: T,
    t_max: T,
    opts: &IntegratorOptions<T>,
) -> Result<Front<T>, FrontError> {
    let hits = first_contacts(scene, front, t_max, opts)?;
    let mut obstacle = None;
    let mut t_last = T::zero();
    for (index, h) in hits.iter().enumerate() {
        let h = h.ok_or(FrontError::Missed { index })?;
        let CurveId::Obstacle(k) = h.curve else { unreachable!("bounding crossings are not armed") };
        if h.tangent {
            return Err(FrontError::Tangential { index });
        }
        match obstacle {
            None => obstacle = Some(k),
            Some(first) if first != k => return Err(FrontError::MixedHits { index, first, other: k }),
            _ => {}
        }
        t_last = t_last.max(h.time);
    }
    let total = t_last + eps;
    let opts = opts.without_path();
    let out: Vec<GeodesicState<T>> = hits
        .par_iter()
        .enumerate()
        .map(|(i, h)| {
            let h = h.expect("checked above");
            let w = scene.reflect(&h, h.velocity)?;
            fly(scene, i, h.point, w, total - h.time, obstacle, &opts)
        })
        .collect::<Result<_, _>>()?;
    let pts: Vec<Vec2<T>> = out.iter().map(|s| s.position).collect();
    let nrm: Vec<Vec2<T>> = out.iter().map(|s| s.velocity).collect();
    Front::rebuild(scene.chart(), front, &pts, &nrm, Provenance::Reflected { obstacle: obstacle.expect("non-empty front") })
}

/// Splits a front into maximal runs of samples whose normal geodesics meet
/// the same obstacle transversally within `t_max`. Samples that miss, graze
/// or sit in runs shorter than the stencil are dropped.
pub fn split_by_hits<T: Real>(
    scene: &Scene<T>,
    front: &Front<T>,
    t_max: T,
    opts: &IntegratorOptions<T>,
) -> Result<Vec<Front<T>>, FrontError> {
    let class: Vec<Option<usize>> = first_contacts(scene, front, t_max, opts)?
        .into_iter()
        .map(|h| match h {
            Some(HitEvent { curve: CurveId::Obstacle(k), tangent: false, .. }) => Some(k),
            _ => None,
        })
        .collect();
    let n = class.len();
    if front.is_closed() && class.iter().all(|c| c.is_some() && *c == class[0]) {
        return Ok(vec![front.clone()]);
    }
    // on a closed front start at a run boundary so no run wraps
    let start = if front.is_closed() { (0..n).find(|&i| class[i] != class[(i + n - 1) % n]).unwrap_or(0) } else { 0 };
    let order: Vec<usize> = (0..n).map(|k| (start + k) % n).collect();
    let mut pieces = Vec::new();
    let mut k = 0;
    while k < n {
        let c = class[order[k]];
        let mut e = k + 1;
        while e < n && class[order[e]] == c {
            e += 1;
        }
        if c.is_some() && e - k >= STENCIL {
            let idx = &order[k..e];
            let mut us: Vec<T> = idx.iter().map(|&j| front.samples[j].u).collect();
            if let Some(p) = front.period {
                for w in 1..us.len() {
                    while us[w] <= us[w - 1] {
                        us[w] = us[w] + p;
                    }
                }
            }
            let pts: Vec<Vec2<T>> = idx.iter().map(|&j| front.samples[j].point).collect();
            let nrm: Vec<Vec2<T>> = idx.iter().map(|&j| front.samples[j].normal).collect();
            pieces.push(Front::from_parts(scene.chart(), &us, &pts, &nrm, None, front.provenance)?);
        }
        k = e;
    }
    Ok(pieces)
}
