//! Geodesic flow of a conformal chart: adaptive integration with dense
//! output, crossing events, parallel transport and scalar Jacobi fields.

mod dopri;
mod events;
mod transport;

pub use dopri::DenseSegment;
pub use events::{CrossingSet, FnCrossing, NoEvents};
pub(crate) use events::{bracketed_root, golden_min};
pub use transport::{distance, jacobi_integrate, parallel_transport, shoot_to, Shot};

use crate::manifold::{GeometryError, MetricChart};
use crate::scalar::{lit, to_f64, Real, Vec2};
use dopri::{step_factor, trial, System};

/// Position, velocity (chart components) and elapsed arc length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicState<T> {
    pub position: Vec2<T>,
    pub velocity: Vec2<T>,
    pub time: T,
}

impl<T: Real> GeodesicState<T> {
    pub fn new(position: Vec2<T>, velocity: Vec2<T>, time: T) -> Self {
        Self { position, velocity, time }
    }

    /// Same point with the velocity reversed.
    pub fn flipped(self) -> Self {
        Self { velocity: -self.velocity, ..self }
    }

    /// Metric speed `|v|_g`.
    pub fn speed(&self, chart: &MetricChart<T>) -> Result<T, GeometryError> {
        chart.norm(self.position, self.velocity)
    }

    fn to_array(self) -> [T; 4] {
        [self.position.x, self.position.y, self.velocity.x, self.velocity.y]
    }

    fn from_array(y: &[T; 4], time: T) -> Self {
        Self::new(Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3]), time)
    }
}

/// Normal component of a Jacobi field in a parallel orthonormal frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JacobiState<T> {
    pub j: T,
    pub j_dot: T,
}

impl<T: Real> JacobiState<T> {
    pub fn new(j: T, j_dot: T) -> Self {
        Self { j, j_dot }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_step: T,
    pub initial_step: T,
    pub max_steps: usize,
    /// Target residual of the implicit function at a localized crossing.
    pub event_tol: T,
    /// Keep dense output segments in the returned path.
    pub record_path: bool,
}

impl<T: Real> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: lit(1e-10),
            rel_tol: lit(1e-9),
            max_step: lit(0.05),
            initial_step: lit(1e-3),
            max_steps: 5_000_000,
            event_tol: lit(1e-10),
            record_path: true,
        }
    }
}

impl<T: Real> IntegratorOptions<T> {
    pub(crate) fn tolerances(&self) -> (T, T) {
        let floor = T::tolerance_floor();
        (self.abs_tol.max(floor), self.rel_tol.max(floor))
    }

    pub(crate) fn event_tolerance(&self) -> T {
        self.event_tol.max(T::tolerance_floor())
    }

    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.abs_tol = tol;
        self.rel_tol = tol * lit(10.0);
        self
    }

    pub fn without_path(mut self) -> Self {
        self.record_path = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("step size underflow at t = {time}")]
    StepUnderflow { time: f64 },
    #[error("step budget exhausted at t = {time}")]
    MaxSteps { time: f64 },
    #[error("trajectory left the chart at t = {time}")]
    ChartExit { time: f64 },
    #[error("time {time} outside the path interval [{start}, {end}]")]
    OutsidePath { time: f64, start: f64, end: f64 },
}

/// Piecewise polynomial trajectory `t -> (position, velocity)`.
#[derive(Clone, Debug, Default)]
pub struct DensePath<T> {
    segments: Vec<DenseSegment<T, 4>>,
}

impl<T: Real> DensePath<T> {
    pub fn segments(&self) -> &[DenseSegment<T, 4>] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn t_start(&self) -> Option<T> {
        self.segments.first().map(|s| s.t0)
    }

    pub fn t_end(&self) -> Option<T> {
        self.segments.last().map(|s| s.t1())
    }

    fn segment_index(&self, t: T) -> usize {
        let i = self.segments.partition_point(|s| s.t1() < t);
        i.min(self.segments.len() - 1)
    }

    /// Interpolated state at `t`; `None` for an empty path.
    pub fn state_at(&self, t: T) -> Option<GeodesicState<T>> {
        if self.segments.is_empty() {
            return None;
        }
        let seg = &self.segments[self.segment_index(t)];
        Some(GeodesicState::from_array(&seg.eval(t), t))
    }

    pub(crate) fn push(&mut self, seg: DenseSegment<T, 4>) {
        self.segments.push(seg);
    }

    /// Appends a path that starts where this one ends.
    pub fn extend(&mut self, other: DensePath<T>) {
        self.segments.extend(other.segments);
    }
}

/// Why an integration stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop<T> {
    Reached,
    /// Crossing `index` of the event set; `residual` is the implicit
    /// function value at the returned state.
    Event { index: usize, residual: T },
    ChartExit,
}

#[derive(Clone, Debug)]
pub struct Integration<T> {
    pub path: DensePath<T>,
    pub end: GeodesicState<T>,
    pub stop: Stop<T>,
    pub steps: usize,
    /// Largest `| |v|_g - 1 |` seen before the per-step projection.
    pub max_drift: T,
}

struct Geodesic<'a, T> {
    chart: &'a MetricChart<T>,
}

impl<T: Real> System<T, 4> for Geodesic<'_, T> {
    type Error = GeometryError;

    #[inline]
    fn eval(&mut self, _t: T, y: &[T; 4]) -> Result<[T; 4], GeometryError> {
        let a = self.chart.geodesic_acceleration(Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3]))?;
        Ok([y[2], y[3], a.x, a.y])
    }
}

/// Scales the velocity of `y` to unit metric length, returning the raw speed.
fn project<T: Real>(chart: &MetricChart<T>, y: &mut [T; 4]) -> Result<T, GeometryError> {
    let speed = chart.norm(Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3]))?;
    if !(speed > T::zero()) {
        return Err(GeometryError::ZeroVector);
    }
    y[2] = y[2] / speed;
    y[3] = y[3] / speed;
    Ok(speed)
}

/// Integrates the geodesic through `s0` forward to absolute time `t_end`,
/// stopping early at the first crossing of `events` or at the chart rim.
pub fn integrate<T: Real, E: CrossingSet<T> + ?Sized>(
    chart: &MetricChart<T>,
    s0: GeodesicState<T>,
    t_end: T,
    events: &E,
    opts: &IntegratorOptions<T>,
) -> Result<Integration<T>, IntegrationError> {
    chart.check(s0.position)?;
    let (atol, rtol) = opts.tolerances();
    let mut sys = Geodesic { chart };
    let mut path = DensePath::default();
    let mut t = s0.time;
    let mut y = s0.to_array();
    let mut max_drift = T::zero();
    if t_end <= t {
        return Ok(Integration { path, end: s0, stop: Stop::Reached, steps: 0, max_drift });
    }
    let mut k1 = sys.eval(t, &y)?;
    let mut g_prev: Vec<T> = (0..events.len()).map(|k| events.value(k, s0.position)).collect();
    let mut h = opts.initial_step.min(opts.max_step).min(t_end - t);
    let h_floor = T::epsilon() * lit(64.0);
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(IntegrationError::MaxSteps { time: to_f64(t) });
        }
        let last = t + h >= t_end;
        let hs = if last { t_end - t } else { h };
        let tr = match trial(&mut sys, t, &y, &k1, hs, atol, rtol) {
            Ok(tr) => tr,
            Err(GeometryError::OutsideChart { .. }) => {
                // a stage left the chart: shrink toward the rim, then stop there
                if hs <= lit(1e-9) {
                    return Ok(Integration {
                        path,
                        end: GeodesicState::from_array(&y, t),
                        stop: Stop::ChartExit,
                        steps,
                        max_drift,
                    });
                }
                h = hs * lit(0.5);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        steps += 1;
        if tr.err > T::one() {
            h = hs * step_factor(tr.err).min(lit(0.9));
            if h < h_floor * t.abs().max(T::one()) {
                return Err(IntegrationError::StepUnderflow { time: to_f64(t) });
            }
            continue;
        }
        let seg = DenseSegment::new(t, hs, &y, &tr.y_new, &tr.k);
        if let Some((index, tau)) = events::first_crossing(events, &seg, &g_prev, opts) {
            let hit = events::localize(&mut sys, events, index, t, &y, &k1, &seg, tau, atol, rtol, opts)?;
            let mut y_hit = hit.y;
            let speed = project(chart, &mut y_hit)?;
            max_drift = max_drift.max((speed - T::one()).abs());
            if opts.record_path {
                path.push(hit.segment);
            }
            return Ok(Integration {
                path,
                end: GeodesicState::from_array(&y_hit, t + hit.tau),
                stop: Stop::Event { index, residual: hit.residual },
                steps,
                max_drift,
            });
        }
        let mut y_new = tr.y_new;
        let speed = project(chart, &mut y_new)?;
        max_drift = max_drift.max((speed - T::one()).abs());
        if opts.record_path {
            path.push(seg);
        }
        t = if last { t_end } else { t + hs };
        y = y_new;
        let p = Vec2::new(y[0], y[1]);
        for (k, g) in g_prev.iter_mut().enumerate() {
            *g = events.value(k, p);
        }
        if last {
            return Ok(Integration { path, end: GeodesicState::from_array(&y, t), stop: Stop::Reached, steps, max_drift });
        }
        k1 = sys.eval(t, &y)?;
        h = (hs * step_factor(tr.err)).min(opts.max_step);
    }
}

/// Geodesic flow for signed time `h`; negative `h` runs the reversed
/// geodesic forward and flips the velocity back.
pub fn geodesic_step<T: Real>(
    chart: &MetricChart<T>,
    s: GeodesicState<T>,
    h: T,
    opts: &IntegratorOptions<T>,
) -> Result<GeodesicState<T>, IntegrationError> {
    if h == T::zero() {
        return Ok(s);
    }
    let opts = opts.without_path();
    let (start, flip) = if h < T::zero() { (s.flipped(), true) } else { (s, false) };
    let run = integrate(chart, start, start.time + h.abs(), &NoEvents, &opts)?;
    if run.stop == Stop::ChartExit {
        return Err(IntegrationError::ChartExit { time: to_f64(run.end.time) });
    }
    let mut end = run.end;
    end.time = s.time + h;
    Ok(if flip { end.flipped() } else { end })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    fn disk() -> MetricChart<f64> {
        MetricChart::poincare_disk(1e-3)
    }

    #[test]
    fn euclidean_straight_line() {
        let c = MetricChart::euclidean();
        let s = geodesic_step(&c, GeodesicState::new(v(0.0, 0.0), v(1.0, 0.0), 0.0), 1.0, &Default::default()).unwrap();
        assert!((s.position - v(1.0, 0.0)).norm() < 1e-12);
        assert!((s.velocity - v(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(s.time, 1.0);
    }

    #[test]
    fn poincare_radial_distance() {
        let c = disk();
        let s0 = GeodesicState::new(v(0.0, 0.0), v(0.5, 0.0), 0.0);
        let s = geodesic_step(&c, s0, 3f64.ln(), &Default::default()).unwrap();
        assert!((s.position - v(0.5, 0.0)).norm() < 1e-6, "{:?}", s.position);
    }

    #[test]
    fn zero_step_is_identity() {
        let c = disk();
        let s0 = GeodesicState::new(v(0.1, 0.2), v(0.3, 0.0), 0.5);
        assert_eq!(geodesic_step(&c, s0, 0.0, &Default::default()).unwrap(), s0);
    }

    #[test]
    fn unit_circle_event() {
        let c = MetricChart::euclidean();
        let circle = FnCrossing(|p: Vec2<f64>| p.norm() - 1.0);
        let run = integrate(&c, GeodesicState::new(v(-2.0, 0.0), v(1.0, 0.0), 0.0), 10.0, &circle, &Default::default()).unwrap();
        assert!(matches!(run.stop, Stop::Event { index: 0, .. }));
        assert!((run.end.position - v(-1.0, 0.0)).norm() < 1e-10);
        assert!((run.end.time - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hyperbolic_circle_event_time() {
        let c = disk();
        let r = 0.5f64.tanh();
        let circle = FnCrossing(move |p: Vec2<f64>| r - p.norm());
        for k in 0..8 {
            let dir = c.unit_at_angle(v(0.0, 0.0), k as f64 * 0.7).unwrap();
            let run = integrate(&c, GeodesicState::new(v(0.0, 0.0), dir, 0.0), 5.0, &circle, &Default::default()).unwrap();
            match run.stop {
                Stop::Event { residual, .. } => assert!(residual.abs() <= 1e-10),
                s => panic!("{s:?}"),
            }
            assert!((run.end.time - 1.0).abs() < 1e-6, "{}", run.end.time);
        }
    }

    #[test]
    fn reaches_end_time_without_event() {
        let c = MetricChart::euclidean();
        let circle = FnCrossing(|p: Vec2<f64>| p.norm() - 1.0);
        let run = integrate(&c, GeodesicState::new(v(-5.0, 3.0), v(1.0, 0.0), 0.0), 2.0, &circle, &Default::default()).unwrap();
        assert_eq!(run.stop, Stop::Reached);
        assert_eq!(run.end.time, 2.0);
    }

    #[test]
    fn grazing_dip_within_one_step_is_found() {
        // chord of depth 1e-6 into a unit circle, far shorter than a step
        let c = MetricChart::euclidean();
        let circle = FnCrossing(|p: Vec2<f64>| p.norm() - 1.0);
        let y0 = 1.0 - 1e-6;
        let opts = IntegratorOptions { max_step: 1.0, ..Default::default() };
        let run = integrate(&c, GeodesicState::new(v(-3.0, y0), v(1.0, 0.0), 0.0), 10.0, &circle, &opts).unwrap();
        assert!(matches!(run.stop, Stop::Event { .. }), "{:?}", run.stop);
        let x_hit = -(1.0 - y0 * y0).sqrt();
        assert!((run.end.position.x - x_hit).abs() < 1e-8);
    }

    #[test]
    fn chart_exit_is_a_stop() {
        let c = MetricChart::poincare_disk(1e-2);
        let run = integrate(&c, GeodesicState::new(v(0.0, 0.0), v(0.5, 0.0), 0.0), 50.0, &NoEvents, &Default::default()).unwrap();
        assert_eq!(run.stop, Stop::ChartExit);
        assert!(run.end.position.norm() < 0.99 && run.end.position.norm() > 0.98);
    }

    #[test]
    fn unit_speed_drift_over_twenty() {
        let c = disk();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            // chords through a small ball stay far from the rim for a while;
            // use the flow restricted to times before the chart exit
            let p = v(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
            let dir = c.unit_at_angle(p, rng.gen_range(0.0..std::f64::consts::TAU)).unwrap();
            let run = integrate(&c, GeodesicState::new(p, dir, 0.0), 20.0, &NoEvents, &Default::default()).unwrap();
            assert!(run.max_drift <= 1e-9, "drift {}", run.max_drift);
        }
    }

    #[test]
    fn time_reversal() {
        let c = disk();
        let s0 = GeodesicState::new(v(0.1, -0.2), c.unit_at_angle(v(0.1, -0.2), 1.1).unwrap(), 0.0);
        let opts = Default::default();
        let s1 = geodesic_step(&c, s0, 2.5, &opts).unwrap();
        let back = geodesic_step(&c, s1, -2.5, &opts).unwrap();
        assert!((back.position - s0.position).norm() < 1e-8);
        assert!((back.velocity - s0.velocity).norm() < 1e-8);
        assert!(back.time.abs() < 1e-15);
    }

    #[test]
    fn dense_path_matches_endpoints() {
        let c = disk();
        let s0 = GeodesicState::new(v(0.0, 0.0), v(0.5, 0.0), 0.0);
        let run = integrate(&c, s0, 3f64.ln(), &NoEvents, &Default::default()).unwrap();
        let mid = run.path.state_at(0.5 * 3f64.ln()).unwrap();
        // hyperbolic midpoint of [0, 0.5] along the axis: tanh(ln 3 / 4)
        assert!((mid.position.x - (3f64.ln() / 4.0).tanh()).abs() < 1e-8);
        assert_eq!(run.path.t_start(), Some(0.0));
    }

    #[test]
    fn f32_integration_is_close_to_f64() {
        let c = MetricChart::<f32>::poincare_disk(1e-3);
        let s0 = GeodesicState::new(Vec2::new(0.0f32, 0.0), Vec2::new(0.5, 0.0), 0.0);
        let s = geodesic_step(&c, s0, 3f32.ln(), &Default::default()).unwrap();
        assert!((s.position.x - 0.5).abs() < 1e-4, "{:?}", s.position);
    }
}
