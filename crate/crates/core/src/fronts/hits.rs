use rayon::prelude::*;

use super::{Front, FrontError};
use crate::billiard::Caps;
use crate::geodesic::{CrossingSet, GeodesicState, IntegratorOptions};
use crate::scalar::{lit, Real, Vec2};
use crate::scene::{CurveId, Scene};

/// The target front as a star-shaped polar curve about an interior pole:
/// radius and normal angle interpolated by four-point Lagrange in the polar
/// angle.
#[derive(Clone)]
struct PolarFront<T> {
    pole: Vec2<T>,
    /// `(angle, radius, normal angle)` in increasing angle.
    table: Vec<(T, T, T)>,
    closed: bool,
    /// Orientation making the start of each ray positive.
    sign: T,
}

fn unwrap_near<T: Real>(a: T, reference: T) -> T {
    let tau = T::TAU();
    a - ((a - reference) / tau).round() * tau
}

impl<T: Real> PolarFront<T> {
    fn new(front: &Front<T>) -> Self {
        let pts = front.points();
        // centroid of the polygon closed by the chord between the ends
        let n = pts.len();
        let (mut area, mut c) = (T::zero(), Vec2::zero());
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let w = a.cross(b);
            area = area + w;
            c += (a + b) * w;
        }
        let pole = if area.abs() > T::epsilon() { c / (area * lit(3.0)) } else { pts.iter().fold(Vec2::zero(), |s, &p| s + p) / lit(n as f64) };
        let mut table = Vec::with_capacity(n);
        let mut prev: Option<(T, T)> = None;
        for s in &front.samples {
            let d = s.point - pole;
            let (mut a, mut psi) = (d.angle(), s.normal.angle());
            if let Some((pa, pp)) = prev {
                a = unwrap_near(a, pa);
                psi = unwrap_near(psi, pp);
            }
            prev = Some((a, psi));
            table.push((a, d.norm(), psi));
        }
        if table[1].0 < table[0].0 {
            table.reverse();
        }
        Self { pole, table, closed: front.is_closed(), sign: T::one() }
    }

    /// Interpolated `(radius, normal angle)` at polar angle `a`, and whether
    /// `a` lies within the sampled sector.
    fn at(&self, a: T) -> (T, T, bool) {
        let n = self.table.len();
        let tau = T::TAU();
        let a0 = self.table[0].0;
        let (mut a, mut inside) = (a0 + (a - a0 - ((a - a0) / tau).floor() * tau), true);
        if !self.closed && a > self.table[n - 1].0 {
            // outside an open front: clamp to the nearer end
            let over = a - self.table[n - 1].0;
            let under = a0 + tau - a;
            a = if over < under { self.table[n - 1].0 } else { a0 };
            inside = false;
        }
        let j = self.table.partition_point(|e| e.0 <= a).saturating_sub(1);
        let node = |k: isize| -> (T, T, T) {
            if self.closed {
                let wraps = k.div_euclid(n as isize);
                let (x, r, p) = self.table[k.rem_euclid(n as isize) as usize];
                (x + tau * lit(wraps as f64), r, p + tau * lit(wraps as f64))
            } else {
                self.table[k.clamp(0, n as isize - 1) as usize]
            }
        };
        let lo = if self.closed { j as isize - 1 } else { (j as isize - 1).clamp(0, n as isize - 4) };
        let nodes: [(T, T, T); 4] = std::array::from_fn(|k| node(lo + k as isize));
        let (mut r, mut p) = (T::zero(), T::zero());
        for k in 0..4 {
            let mut w = T::one();
            for m in 0..4 {
                if m != k {
                    w = w * (a - nodes[m].0) / (nodes[k].0 - nodes[m].0);
                }
            }
            r = r + nodes[k].1 * w;
            p = p + unwrap_near(nodes[k].2, nodes[0].2) * w;
        }
        (r, p, inside)
    }

    fn raw(&self, p: Vec2<T>) -> T {
        let d = p - self.pole;
        d.norm() - self.at(d.angle()).0
    }
}

impl<T: Real> CrossingSet<T> for PolarFront<T> {
    fn len(&self) -> usize {
        1
    }

    fn value(&self, _k: usize, p: Vec2<T>) -> T {
        self.sign * self.raw(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalHits<T> {
    /// Samples of X whose normal geodesic meets Y orthogonally: those within
    /// the angular tolerance and the better end of every sign change.
    pub indices: Vec<usize>,
    /// `<arrival direction, unit tangent of Y>_g`, or `None` if the
    /// geodesic never reaches Y.
    pub alignment: Vec<Option<T>>,
    /// `i` such that the alignment changes sign between `i` and `i + 1`.
    pub sign_changes: Vec<usize>,
    /// Reflections before arrival, per sample.
    pub reflections: Vec<usize>,
}

/// Follows the normal geodesics of `x` (with reflections) to their first
/// crossing of `y` and measures how far each arrives from `y`'s normal.
pub fn orthogonal_hits<T: Real>(
    scene: &Scene<T>,
    x: &Front<T>,
    y: &Front<T>,
    caps: &Caps<T>,
    tol: T,
    opts: &IntegratorOptions<T>,
) -> Result<OrthogonalHits<T>, FrontError> {
    let chart = scene.chart();
    let polar = PolarFront::new(y);
    let opts = opts.without_path();
    let arrivals: Vec<Option<(T, usize)>> = x
        .samples
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let sign = if polar.raw(s.point) >= T::zero() { T::one() } else { -T::one() };
            let target = PolarFront { sign, ..polar.clone() };
            let mut st = GeodesicState::new(s.point, s.normal, T::zero());
            let (mut reflections, mut spurious) = (0, 0);
            loop {
                let leg = scene.advance_to_target(st, caps.max_time, false, None, Some(&target), &opts)?;
                if leg.chart_exit {
                    return Ok(None);
                }
                st = leg.end;
                if leg.target.is_some() {
                    let d = st.position - target.pole;
                    let (_, psi, inside) = target.at(d.angle());
                    if !inside {
                        // crossing of the extension beyond an open front's ends
                        spurious += 1;
                        if spurious > 4 {
                            return Ok(None);
                        }
                        continue;
                    }
                    let nu = Vec2::from_angle(psi) / chart.scale(st.position)?;
                    return Ok(Some((chart.inner(st.position, st.velocity, nu.perp())?, reflections)));
                }
                let Some(hit) = leg.hit else { return Ok(None) };
                let CurveId::Obstacle(_) = hit.curve else { unreachable!("bounding crossings are not armed") };
                if hit.tangent {
                    return Err(FrontError::Tangential { index });
                }
                st.velocity = scene.reflect(&hit, st.velocity)?;
                reflections += 1;
                if reflections > caps.max_reflections {
                    return Err(FrontError::ReflectionCap { index, cap: caps.max_reflections });
                }
            }
        })
        .collect::<Result<_, FrontError>>()?;
    let alignment: Vec<Option<T>> = arrivals.iter().map(|a| a.map(|v| v.0)).collect();
    let n = alignment.len();
    let pairs = if x.is_closed() { n } else { n - 1 };
    let mut sign_changes = Vec::new();
    let mut indices: Vec<usize> = (0..n).filter(|&i| alignment[i].is_some_and(|a| a.abs() <= tol)).collect();
    for i in 0..pairs {
        let j = (i + 1) % n;
        if let (Some(a), Some(b)) = (alignment[i], alignment[j]) {
            if (a > T::zero()) != (b > T::zero()) {
                sign_changes.push(i);
                indices.push(if a.abs() <= b.abs() { i } else { j });
            }
        }
    }
    indices.sort_unstable();
    indices.dedup();
    Ok(OrthogonalHits { indices, alignment, sign_changes, reflections: arrivals.iter().map(|a| a.map_or(0, |v| v.1)).collect() })
}
