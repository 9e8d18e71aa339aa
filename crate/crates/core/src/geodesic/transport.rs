//! Linear equations along a computed geodesic, and two-point shooting.

use super::dopri::{solve, DenseSegment, System};
use super::{integrate, DensePath, GeodesicState, IntegrationError, IntegratorOptions, JacobiState, NoEvents, Stop};
use crate::manifold::{GeometryError, MetricChart};
use crate::scalar::{lit, to_f64, Real, Vec2};

struct Transport<'a, T> {
    chart: &'a MetricChart<T>,
    seg: &'a DenseSegment<T, 4>,
}

impl<T: Real> System<T, 2> for Transport<'_, T> {
    type Error = GeometryError;

    fn eval(&mut self, t: T, v: &[T; 2]) -> Result<[T; 2], GeometryError> {
        let y = self.seg.eval(t);
        let c = self.chart.connection(Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3]), Vec2::new(v[0], v[1]))?;
        Ok([-c.x, -c.y])
    }
}

struct Jacobi<'a, T> {
    chart: &'a MetricChart<T>,
    seg: &'a DenseSegment<T, 4>,
}

impl<T: Real> System<T, 2> for Jacobi<'_, T> {
    type Error = GeometryError;

    fn eval(&mut self, t: T, s: &[T; 2]) -> Result<[T; 2], GeometryError> {
        let y = self.seg.eval(t);
        let k = self.chart.gauss_curvature(Vec2::new(y[0], y[1]))?;
        Ok([s[1], -k * s[0]])
    }
}

fn run_segments<'a, T: Real, const N: usize, S: System<T, N, Error = GeometryError>>(
    path: &'a DensePath<T>,
    t_stop: T,
    y0: [T; N],
    opts: &IntegratorOptions<T>,
    mut make: impl FnMut(&'a DenseSegment<T, 4>) -> S,
) -> Result<[T; N], IntegrationError> {
    let (atol, rtol) = opts.tolerances();
    let mut y = y0;
    for seg in path.segments() {
        if seg.t0 >= t_stop {
            break;
        }
        let t1 = seg.t1().min(t_stop);
        let mut sys = make(seg);
        y = solve(&mut sys, seg.t0, t1, y, atol, rtol, seg.h, opts.max_steps)?
            .ok_or(IntegrationError::StepUnderflow { time: to_f64(seg.t0) })?;
    }
    Ok(y)
}

/// Parallel transport of `v0` from the start of `path` to its end.
pub fn parallel_transport<T: Real>(
    chart: &MetricChart<T>,
    path: &DensePath<T>,
    v0: Vec2<T>,
    opts: &IntegratorOptions<T>,
) -> Result<Vec2<T>, IntegrationError> {
    let Some(end) = path.t_end() else { return Ok(v0) };
    let v = run_segments(path, end, [v0.x, v0.y], opts, |seg| Transport { chart, seg })?;
    Ok(Vec2::new(v[0], v[1]))
}

/// Solves `j'' + K(gamma(t)) j = 0` along `path` from its start to time `t`.
pub fn jacobi_integrate<T: Real>(
    chart: &MetricChart<T>,
    path: &DensePath<T>,
    j0: JacobiState<T>,
    t: T,
    opts: &IntegratorOptions<T>,
) -> Result<JacobiState<T>, IntegrationError> {
    let (Some(start), Some(end)) = (path.t_start(), path.t_end()) else {
        return Err(IntegrationError::OutsidePath { time: to_f64(t), start: f64::NAN, end: f64::NAN });
    };
    let slack = lit::<T>(1e-12) * end.abs().max(T::one());
    if t < start - slack || t > end + slack {
        return Err(IntegrationError::OutsidePath { time: to_f64(t), start: to_f64(start), end: to_f64(end) });
    }
    let s = run_segments(path, t, [j0.j, j0.j_dot], opts, |seg| Jacobi { chart, seg })?;
    Ok(JacobiState::new(s[0], s[1]))
}

/// Result of a two-point shooting solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shot<T> {
    /// Arc length of the connecting geodesic.
    pub length: T,
    /// Unit initial velocity at the start point.
    pub direction: Vec2<T>,
    /// Chart distance between the shot's end point and the target.
    pub residual: T,
    pub iterations: usize,
}

/// Connects `p` to `q` by a geodesic using Newton's method on the launch
/// angle and length. The angle Jacobian comes from the Jacobi field with
/// `j(0) = 0, j'(0) = 1`, which is exact in the absence of conjugate points.
pub fn shoot_to<T: Real>(
    chart: &MetricChart<T>,
    p: Vec2<T>,
    q: Vec2<T>,
    opts: &IntegratorOptions<T>,
) -> Result<Shot<T>, IntegrationError> {
    chart.check(p)?;
    chart.check(q)?;
    let d = q - p;
    if d.norm() == T::zero() {
        return Ok(Shot { length: T::zero(), direction: chart.unit_at_angle(p, T::zero())?, residual: T::zero(), iterations: 0 });
    }
    let mut alpha = d.angle();
    let mut len = d.norm() * chart.scale((p + q) * lit::<T>(0.5))?;
    let target = lit::<T>(64.0) * T::epsilon() * (p.norm().max(q.norm()).max(T::one()));
    let opts = IntegratorOptions { record_path: true, ..*opts };
    let mut last_res = T::infinity();
    for it in 0..60 {
        let dir = chart.unit_at_angle(p, alpha)?;
        let run = integrate(chart, GeodesicState::new(p, dir, T::zero()), len, &NoEvents, &opts)?;
        if run.stop != Stop::Reached {
            return Err(IntegrationError::ChartExit { time: to_f64(run.end.time) });
        }
        let r = run.end.position - q;
        let res = r.norm();
        if res <= target || (it > 3 && res >= last_res * lit(0.5) && res < lit(1e-11)) {
            return Ok(Shot { length: len, direction: dir, residual: res, iterations: it });
        }
        last_res = res;
        let jac = jacobi_integrate(chart, &run.path, JacobiState::new(T::zero(), T::one()), len, &opts)?;
        let v = run.end.velocity;
        let da = v.perp() * jac.j;
        // solve [da v] [d_alpha d_len]^T = -r
        let det = da.cross(v);
        if det.abs() < T::min_positive_value() {
            return Err(IntegrationError::Geometry(GeometryError::ZeroVector));
        }
        let d_alpha = -r.cross(v) / det;
        let d_len = -da.cross(r) / det;
        let lim = lit::<T>(0.5);
        alpha = alpha + d_alpha.max(-lim).min(lim);
        len = (len + d_len).max(len * lit(0.5));
    }
    Err(IntegrationError::MaxSteps { time: to_f64(len) })
}

/// Geodesic distance between `p` and `q` (assumes a unique minimising geodesic).
pub fn distance<T: Real>(
    chart: &MetricChart<T>,
    p: Vec2<T>,
    q: Vec2<T>,
    opts: &IntegratorOptions<T>,
) -> Result<T, IntegrationError> {
    Ok(shoot_to(chart, p, q, opts)?.length)
}
