//! Crossing detection on dense output and localization on true sub-steps.

use super::dopri::{trial, DenseSegment, System};
use super::{IntegrationError, IntegratorOptions};
use crate::manifold::GeometryError;
use crate::scalar::{lit, Real, Vec2};

/// Family of implicit curves `g_k(p) = 0`. Crossing `k` fires when `g_k`
/// goes from positive to non-positive along the trajectory.
pub trait CrossingSet<T> {
    fn len(&self) -> usize;
    fn value(&self, k: usize, p: Vec2<T>) -> T;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoEvents;

impl<T> CrossingSet<T> for NoEvents {
    fn len(&self) -> usize {
        0
    }

    fn value(&self, _k: usize, _p: Vec2<T>) -> T {
        unreachable!("empty crossing set")
    }
}

/// A single crossing given by a closure.
#[derive(Clone, Copy, Debug)]
pub struct FnCrossing<F>(pub F);

impl<T, F: Fn(Vec2<T>) -> T> CrossingSet<T> for FnCrossing<F> {
    fn len(&self) -> usize {
        1
    }

    fn value(&self, _k: usize, p: Vec2<T>) -> T {
        (self.0)(p)
    }
}

const SAMPLES: usize = 8;

#[inline]
fn position<T: Real>(y: &[T; 4]) -> Vec2<T> {
    Vec2::new(y[0], y[1])
}

/// Bracketed root of `f` with `fa > 0 >= fb`: secant steps with Illinois
/// weighting, replaced by bisection whenever the bracket fails to halve.
pub(crate) fn bracketed_root<T: Real, E>(
    mut f: impl FnMut(T) -> Result<T, E>,
    mut a: T,
    mut fa: T,
    mut b: T,
    mut fb: T,
    tol: T,
) -> Result<(T, T), E> {
    let half = lit::<T>(0.5);
    let mut side = 0i8;
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for it in 0..200 {
        if best.1.abs() <= tol {
            break;
        }
        let width = b - a;
        if width <= T::epsilon() * (a.abs() + b.abs()).max(T::min_positive_value()) {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) || it % 4 == 3 {
            c = a + width * half;
        }
        let fc = f(c)?;
        if fc.abs() < best.1.abs() {
            best = (c, fc);
        }
        if fc > T::zero() {
            a = c;
            fa = fc;
            if side == 1 {
                fb = fb * half;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa = fa * half;
            }
            side = -1;
        }
    }
    Ok(best)
}

pub(crate) fn golden_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> (T, T) {
    let r = lit::<T>(0.618_033_988_749_894_8);
    let mut c = b - (b - a) * r;
    let mut d = a + (b - a) * r;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * r;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * r;
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Searches `seg` for a sign change of every armed crossing and returns the
/// event with the earliest dense-output root, with its bracket.
pub(crate) fn first_crossing<T: Real, E: CrossingSet<T> + ?Sized>(
    events: &E,
    seg: &DenseSegment<T, 4>,
    g_start: &[T],
    opts: &IntegratorOptions<T>,
) -> Option<(usize, [T; 2])> {
    if events.is_empty() {
        return None;
    }
    let ts: [T; SAMPLES + 1] =
        std::array::from_fn(|i| seg.t0 + seg.h * lit::<T>(i as f64) / lit::<T>(SAMPLES as f64));
    let ps: [Vec2<T>; SAMPLES + 1] = std::array::from_fn(|i| position(&seg.eval(ts[i])));
    let spacing = (1..=SAMPLES).map(|i| (ps[i] - ps[i - 1]).norm()).fold(T::zero(), T::max);
    let tol = opts.event_tolerance();
    let mut best: Option<(usize, [T; 2], T)> = None;
    for k in 0..events.len() {
        let g_at = |t: T| events.value(k, position(&seg.eval(t)));
        let mut gs = [T::zero(); SAMPLES + 1];
        gs[0] = g_start[k];
        for i in 1..=SAMPLES {
            gs[i] = events.value(k, ps[i]);
        }
        let mut bracket = (1..=SAMPLES).find(|&i| gs[i - 1] > T::zero() && gs[i] <= T::zero()).map(|i| [ts[i - 1], ts[i]]);
        if bracket.is_none() {
            // both ends outside: look for a shallow dip between samples
            for i in 0..=SAMPLES {
                let lo = if i == 0 { 0 } else { i - 1 };
                let hi = (i + 1).min(SAMPLES);
                if !(gs[i] > T::zero() && gs[i] < spacing && gs[i] <= gs[lo] && gs[i] <= gs[hi]) {
                    continue;
                }
                let (tm, gm) = golden_min(g_at, ts[lo], ts[hi]);
                if gm <= T::zero() {
                    // tm > ts[lo] because g(ts[lo]) > 0
                    bracket = Some([if lo == 0 { seg.t0 } else { ts[lo] }, tm]);
                    break;
                }
            }
        }
        let Some([a, b]) = bracket else { continue };
        let ga = if a == seg.t0 { g_start[k] } else { g_at(a) };
        let gb = g_at(b);
        if !(ga > T::zero() && gb <= T::zero()) {
            continue;
        }
        let Ok((root, _)) = bracketed_root(|t| Ok::<T, ()>(g_at(t)), a, ga, b, gb, tol) else { continue };
        if best.as_ref().map_or(true, |(_, _, r)| root < *r) {
            best = Some((k, [a, b], root));
        }
    }
    best.map(|(k, br, _)| (k, br))
}

pub(crate) struct Hit<T> {
    pub y: [T; 4],
    pub tau: T,
    pub residual: T,
    pub segment: DenseSegment<T, 4>,
}

/// Localizes crossing `k` inside `bracket` by re-stepping from `(t0, y0)`
/// with sub-steps of trial length, so the returned state is a genuine
/// integrator state rather than an interpolant.
#[allow(clippy::too_many_arguments)]
pub(crate) fn localize<T: Real, S, E>(
    sys: &mut S,
    events: &E,
    k: usize,
    t0: T,
    y0: &[T; 4],
    k1: &[T; 4],
    seg: &DenseSegment<T, 4>,
    bracket: [T; 2],
    atol: T,
    rtol: T,
    opts: &IntegratorOptions<T>,
) -> Result<Hit<T>, IntegrationError>
where
    S: System<T, 4, Error = GeometryError>,
    E: CrossingSet<T> + ?Sized,
{
    let tol = opts.event_tolerance();
    let g_dense = |t: T| events.value(k, position(&seg.eval(t)));
    let (a, b) = (bracket[0] - t0, bracket[1] - t0);
    let mut g_sub = |tau: T| -> Result<T, GeometryError> {
        if tau <= T::zero() {
            return Ok(events.value(k, position(y0)));
        }
        let tr = trial(sys, t0, y0, k1, tau, atol, rtol)?;
        Ok(events.value(k, position(&tr.y_new)))
    };
    let ga = g_sub(a)?;
    let gb = g_sub(b)?;
    let tau = if ga > T::zero() && gb <= T::zero() {
        bracketed_root(&mut g_sub, a, ga, b, gb, tol)?.0
    } else {
        // sub-steps disagree with the interpolant at the bracket ends
        let (root, _) = bracketed_root(|t| Ok::<T, ()>(g_dense(t)), bracket[0], g_dense(bracket[0]), bracket[1], g_dense(bracket[1]), tol)
            .unwrap_or((bracket[1], T::zero()));
        root - t0
    };
    let tau = tau.max(T::min_positive_value());
    let tr = trial(sys, t0, y0, k1, tau, atol, rtol)?;
    let residual = events.value(k, position(&tr.y_new));
    Ok(Hit { y: tr.y_new, tau, residual, segment: DenseSegment::new(t0, tau, y0, &tr.y_new, &tr.k) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_cubic() {
        let (r, fr) = bracketed_root(|x: f64| Ok::<_, ()>(2.0 - x * x * x), 0.0, 2.0, 2.0, -6.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13 && fr.abs() <= 1e-14);
    }

    #[test]
    fn root_of_flat_function_terminates() {
        // nearly tangent crossing: f = (x - 1)^3 has zero slope at the root
        let (r, _) = bracketed_root(|x: f64| Ok::<_, ()>(-(x - 1.0).powi(3)), 0.0, 1.0, 3.0, -8.0, 1e-30).unwrap();
        assert!((r - 1.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_min(|x: f64| (x - 0.3).powi(2) + 1.0, 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-7 && (fx - 1.0).abs() < 1e-12);
    }
}
