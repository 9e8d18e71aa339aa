//! Bounding curve, convex obstacles, hit classification and reflection.

mod curve;

pub use curve::{BoundaryCurve, Orientation};

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geodesic::{
    golden_min, integrate, CrossingSet, DensePath, GeodesicState, IntegrationError, IntegratorOptions, Stop,
};
use crate::manifold::{GeometryError, MetricChart};
use crate::scalar::{lit, to_f64, Real, Vec2};

/// Time during which a grazed obstacle is ignored after a tangential hit.
const GRAZE_SKIP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveId {
    Bounding,
    Obstacle(usize),
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveId::Bounding => write!(f, "bounding"),
            CurveId::Obstacle(i) => write!(f, "obstacles[{i}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("{curve}: radius is not positive near u = {u}")]
    NonPositiveRadius { curve: String, u: f64 },
    #[error("{curve}: leaves the chart domain near u = {u}")]
    OutsideChart { curve: String, u: f64 },
    #[error("{curve}: degenerate parametrisation at u = {u}")]
    Degenerate { curve: String, u: f64 },
    #[error("{curve}: not strictly convex at u = {u} (geodesic curvature {kappa})")]
    NotConvex { curve: String, u: f64, kappa: f64 },
    #[error("{curve}: not strictly inside the bounding curve")]
    NotInside { curve: String },
    #[error("{a} and {b} intersect")]
    Overlap { a: String, b: String },
    #[error("the free region inside the bounding curve is not connected")]
    Disconnected,
    #[error("tangential hit on {curve}")]
    Tangential { curve: String },
    #[error("trajectory left the chart at t = {time}")]
    ChartExit { time: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// Crossing of a trajectory with a scene curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HitEvent<T> {
    pub curve: CurveId,
    pub point: Vec2<T>,
    pub u: T,
    pub time: T,
    /// Incoming unit velocity.
    pub velocity: Vec2<T>,
    /// `<omega, nu>_g` with `nu` the outward unit normal.
    pub incidence: T,
    pub tangent: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneOptions<T> {
    pub samples: usize,
    pub seed: u64,
    pub tangency: T,
    pub flood_resolution: usize,
}

impl<T: Real> Default for SceneOptions<T> {
    fn default() -> Self {
        Self { samples: 512, seed: 0, tangency: lit(1e-6), flood_resolution: 160 }
    }
}

/// Result of advancing a state to the next scene event.
#[derive(Clone, Debug)]
pub struct Leg<T> {
    pub end: GeodesicState<T>,
    pub hit: Option<HitEvent<T>>,
    pub chart_exit: bool,
    /// Index of the extra target crossing that stopped the leg, if any.
    pub target: Option<usize>,
    pub path: DensePath<T>,
    pub max_drift: T,
}

#[derive(Clone, Debug)]
pub struct Scene<T> {
    chart: MetricChart<T>,
    bounding: BoundaryCurve<T>,
    obstacles: Vec<BoundaryCurve<T>>,
    min_separation: Option<T>,
    options: SceneOptions<T>,
}

struct SceneCrossings<'a, T> {
    scene: &'a Scene<T>,
    bounding: bool,
    skip: Option<usize>,
    target: Option<&'a (dyn CrossingSet<T> + Sync)>,
}

impl<T: Real> SceneCrossings<'_, T> {
    fn base(&self) -> usize {
        self.scene.obstacles.len() + usize::from(self.bounding)
    }
}

impl<T: Real> CrossingSet<T> for SceneCrossings<'_, T> {
    fn len(&self) -> usize {
        self.base() + self.target.map_or(0, |t| t.len())
    }

    #[inline]
    fn value(&self, k: usize, p: Vec2<T>) -> T {
        let n = self.scene.obstacles.len();
        match self.scene.obstacles.get(k) {
            Some(_) if self.skip == Some(k) => T::one(),
            Some(c) => c.implicit(p),
            None if self.bounding && k == n => -self.scene.bounding.implicit(p),
            None => self.target.expect("target crossing index").value(k - self.base(), p),
        }
    }
}

impl<T: Real> Scene<T> {
    pub fn new(
        chart: MetricChart<T>,
        bounding: BoundaryCurve<T>,
        obstacles: Vec<BoundaryCurve<T>>,
        options: &SceneOptions<T>,
    ) -> Result<Self, SceneError> {
        let mut scene = Self { chart, bounding, obstacles, min_separation: None, options: *options };
        scene.validate()?;
        Ok(scene)
    }

    pub fn chart(&self) -> &MetricChart<T> {
        &self.chart
    }

    pub fn bounding(&self) -> &BoundaryCurve<T> {
        &self.bounding
    }

    pub fn obstacles(&self) -> &[BoundaryCurve<T>] {
        &self.obstacles
    }

    pub fn options(&self) -> &SceneOptions<T> {
        &self.options
    }

    pub fn tangency(&self) -> T {
        self.options.tangency
    }

    /// Lower bound `b` on the metric distance between distinct obstacles.
    pub fn min_separation(&self) -> Option<T> {
        self.min_separation
    }

    pub fn curve(&self, id: CurveId) -> &BoundaryCurve<T> {
        match id {
            CurveId::Bounding => &self.bounding,
            CurveId::Obstacle(i) => &self.obstacles[i],
        }
    }

    pub fn curve_ids(&self) -> impl Iterator<Item = CurveId> + '_ {
        std::iter::once(CurveId::Bounding).chain((0..self.obstacles.len()).map(CurveId::Obstacle))
    }

    /// Copy with obstacle `i` replaced, re-validated.
    pub fn with_obstacle(&self, i: usize, curve: BoundaryCurve<T>) -> Result<Self, SceneError> {
        let mut obstacles = self.obstacles.clone();
        obstacles[i] = curve;
        Self::new(self.chart.clone(), self.bounding.clone(), obstacles, &self.options)
    }

    fn sample_params(&self) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.options.seed);
        let phase: f64 = rng.gen();
        let n = self.options.samples.max(8);
        (0..n).map(|i| lit((i as f64 + phase) / n as f64)).collect()
    }

    fn validate(&mut self) -> Result<(), SceneError> {
        let params = self.sample_params();
        let ids: Vec<CurveId> = self.curve_ids().collect();
        for &id in &ids {
            let c = self.curve(id);
            let name = id.to_string();
            for &u in &params {
                let th = T::TAU() * u;
                if !(c.radial(th).0 > T::zero()) {
                    return Err(SceneError::NonPositiveRadius { curve: name, u: to_f64(u) });
                }
                let p = c.point(u);
                if !self.chart.contains(p) || !(self.chart.domain().clearance(p) > T::zero()) {
                    return Err(SceneError::OutsideChart { curve: name, u: to_f64(u) });
                }
                let c_u = c.tangent(u);
                let speed = self.chart.norm(p, c_u)?;
                if !(speed > T::epsilon().sqrt()) {
                    return Err(SceneError::Degenerate { curve: name, u: to_f64(u) });
                }
                if c.normal_direction(u).dot(p - c.center) <= T::zero() {
                    return Err(SceneError::Degenerate { curve: name, u: to_f64(u) });
                }
                let kappa = self.geodesic_curvature(id, u)?;
                if !(kappa < T::zero()) {
                    return Err(SceneError::NotConvex { curve: name, u: to_f64(u), kappa: to_f64(kappa) });
                }
            }
        }
        let pts: Vec<Vec<Vec2<T>>> =
            self.obstacles.iter().map(|c| params.iter().map(|&u| c.point(u)).collect()).collect();
        for (i, ps) in pts.iter().enumerate() {
            if ps.iter().any(|&p| !(self.bounding.implicit(p) < T::zero())) {
                return Err(SceneError::NotInside { curve: CurveId::Obstacle(i).to_string() });
            }
        }
        let mut sep_chart = T::infinity();
        for i in 0..self.obstacles.len() {
            for j in i + 1..self.obstacles.len() {
                let (a, b) = (&self.obstacles[i], &self.obstacles[j]);
                let overlap = pts[i].iter().any(|&p| !(b.implicit(p) > T::zero()))
                    || pts[j].iter().any(|&p| !(a.implicit(p) > T::zero()));
                if overlap {
                    return Err(SceneError::Overlap {
                        a: CurveId::Obstacle(i).to_string(),
                        b: CurveId::Obstacle(j).to_string(),
                    });
                }
                sep_chart = sep_chart.min(closest_approach(a, b, &params));
            }
        }
        let inf_scale = self.flood_check()?;
        self.min_separation = (self.obstacles.len() > 1).then(|| sep_chart * inf_scale);
        Ok(())
    }

    /// Connectivity of the free cells of a grid over the bounding box of S.
    /// Returns the smallest conformal scale seen on free cells.
    fn flood_check(&self) -> Result<T, SceneError> {
        let n = self.options.flood_resolution.max(16);
        let r = self.bounding.max_radius();
        let lo = self.bounding.center - Vec2::new(r, r);
        let cell = lit::<T>(2.0) * r / lit(n as f64);
        let free: Vec<bool> = (0..n * n)
            .map(|k| {
                let p = lo + Vec2::new(lit::<T>((k % n) as f64 + 0.5), lit::<T>((k / n) as f64 + 0.5)) * cell;
                self.bounding.implicit(p) < T::zero() && self.obstacles.iter().all(|c| c.implicit(p) > T::zero())
            })
            .collect();
        let Some(start) = free.iter().position(|&f| f) else { return Err(SceneError::Disconnected) };
        let mut seen = vec![false; n * n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut inf_scale = T::infinity();
        while let Some(k) = queue.pop_front() {
            let (ix, iy) = (k % n, k / n);
            let p = lo + Vec2::new(lit::<T>(ix as f64 + 0.5), lit::<T>(iy as f64 + 0.5)) * cell;
            if let Ok(s) = self.chart.scale(p) {
                inf_scale = inf_scale.min(s);
            }
            let mut visit = |j: usize| {
                if free[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if ix > 0 {
                visit(k - 1);
            }
            if ix + 1 < n {
                visit(k + 1);
            }
            if iy > 0 {
                visit(k - n);
            }
            if iy + 1 < n {
                visit(k + n);
            }
        }
        if free.iter().zip(&seen).any(|(&f, &s)| f && !s) {
            return Err(SceneError::Disconnected);
        }
        Ok(inf_scale)
    }

    /// Outward unit normal of `id` at the point `at` (chart components,
    /// metric unit length at `at`), using the curve parameter `u`.
    pub fn unit_normal_at(&self, id: CurveId, u: T, at: Vec2<T>) -> Result<Vec2<T>, GeometryError> {
        let n = self.curve(id).normal_direction(u);
        Ok(n / (n.norm() * self.chart.scale(at)?))
    }

    pub fn unit_normal(&self, id: CurveId, u: T) -> Result<Vec2<T>, GeometryError> {
        self.unit_normal_at(id, u, self.curve(id).point(u))
    }

    /// Unit tangent in the direction of increasing `u`.
    pub fn unit_tangent(&self, id: CurveId, u: T) -> Result<Vec2<T>, GeometryError> {
        let c = self.curve(id);
        let t = c.tangent(u);
        Ok(t / self.chart.norm(c.point(u), t)?)
    }

    /// `<nabla_u c', nu>_g / |c'|_g^2` with `nu` the oriented unit normal.
    pub fn geodesic_curvature(&self, id: CurveId, u: T) -> Result<T, SceneError> {
        let c = self.curve(id);
        let p = c.point(u);
        let c1 = c.tangent(u);
        let speed2 = self.chart.inner(p, c1, c1)?;
        if !(speed2 > T::epsilon()) {
            return Err(SceneError::Degenerate { curve: id.to_string(), u: to_f64(u) });
        }
        let acc = c.second_derivative(u) + self.chart.connection(p, c1, c1)?;
        let nu = self.unit_normal(id, u)?;
        Ok(self.chart.inner(p, acc, nu)? / speed2)
    }

    /// Builds the hit record for a state lying on curve `id`.
    pub fn classify(&self, id: CurveId, s: &GeodesicState<T>) -> Result<HitEvent<T>, GeometryError> {
        let u = self.curve(id).param_of(s.position);
        let nu = self.unit_normal_at(id, u, s.position)?;
        let incidence = self.chart.inner(s.position, s.velocity, nu)?;
        Ok(HitEvent {
            curve: id,
            point: s.position,
            u,
            time: s.time,
            velocity: s.velocity,
            incidence,
            tangent: incidence.abs() <= self.options.tangency,
        })
    }

    /// Specular reflection `omega - 2 <omega, nu>_g nu` at a non-tangential hit.
    pub fn reflect(&self, at: &HitEvent<T>, omega: Vec2<T>) -> Result<Vec2<T>, SceneError> {
        let nu = self.unit_normal_at(at.curve, at.u, at.point)?;
        let c = self.chart.inner(at.point, omega, nu)?;
        if c.abs() <= self.options.tangency {
            return Err(SceneError::Tangential { curve: at.curve.to_string() });
        }
        Ok(omega - nu * (lit::<T>(2.0) * c))
    }

    /// Advances `s0` to absolute time `t_end` or to the first crossing of an
    /// obstacle (entering) or, when `with_bounding`, of the bounding curve
    /// (leaving). `graze` suppresses one obstacle for a short time after a
    /// tangential contact with it.
    pub fn advance(
        &self,
        s0: GeodesicState<T>,
        t_end: T,
        with_bounding: bool,
        graze: Option<usize>,
        opts: &IntegratorOptions<T>,
    ) -> Result<Leg<T>, SceneError> {
        self.advance_to_target(s0, t_end, with_bounding, graze, None, opts)
    }

    /// [`Scene::advance`] with additional crossings that also end the leg.
    pub fn advance_to_target(
        &self,
        s0: GeodesicState<T>,
        t_end: T,
        with_bounding: bool,
        graze: Option<usize>,
        target: Option<&(dyn CrossingSet<T> + Sync)>,
        opts: &IntegratorOptions<T>,
    ) -> Result<Leg<T>, SceneError> {
        let mut path = DensePath::default();
        let mut s = s0;
        let mut drift = T::zero();
        let events = |skip| SceneCrossings { scene: self, bounding: with_bounding, skip, target };
        if let Some(k) = graze {
            let t_skip = (s0.time + lit(GRAZE_SKIP)).min(t_end);
            let ev = events(Some(k));
            let run = integrate(&self.chart, s, t_skip, &ev, opts)?;
            path = run.path;
            drift = run.max_drift;
            if let Some(leg) = self.finish(&ev, &run.stop, run.end, &mut path, drift)? {
                return Ok(leg);
            }
            s = run.end;
        }
        let ev = events(None);
        let run = integrate(&self.chart, s, t_end, &ev, opts)?;
        path.extend(run.path);
        drift = drift.max(run.max_drift);
        match self.finish(&ev, &run.stop, run.end, &mut path, drift)? {
            Some(leg) => Ok(leg),
            None => Ok(Leg { end: run.end, hit: None, chart_exit: false, target: None, path, max_drift: drift }),
        }
    }

    fn finish(
        &self,
        events: &SceneCrossings<'_, T>,
        stop: &Stop<T>,
        end: GeodesicState<T>,
        path: &mut DensePath<T>,
        drift: T,
    ) -> Result<Option<Leg<T>>, SceneError> {
        let leg = |hit, chart_exit, target, path: &mut DensePath<T>| Leg {
            end,
            hit,
            chart_exit,
            target,
            path: std::mem::take(path),
            max_drift: drift,
        };
        Ok(match *stop {
            Stop::Reached => None,
            Stop::ChartExit => Some(leg(None, true, None, path)),
            Stop::Event { index, .. } if index >= events.base() => Some(leg(None, false, Some(index - events.base()), path)),
            Stop::Event { index, .. } => {
                let id = if index < self.obstacles.len() { CurveId::Obstacle(index) } else { CurveId::Bounding };
                Some(leg(Some(self.classify(id, &end)?), false, None, path))
            }
        })
    }

    /// Whether `p` lies strictly inside S and outside every obstacle.
    pub fn is_free(&self, p: Vec2<T>) -> bool {
        self.chart.contains(p) && self.bounding.implicit(p) < T::zero() && self.obstacles.iter().all(|c| c.implicit(p) > T::zero())
    }

    /// Earliest crossing of any scene curve within time `t_max` of `s0`.
    pub fn first_hit(
        &self,
        s0: GeodesicState<T>,
        t_max: T,
        opts: &IntegratorOptions<T>,
    ) -> Result<Option<HitEvent<T>>, SceneError> {
        let leg = self.advance(s0, s0.time + t_max, true, None, &opts.without_path())?;
        if leg.chart_exit {
            return Err(SceneError::ChartExit { time: to_f64(leg.end.time) });
        }
        Ok(leg.hit)
    }
}

/// Chart distance between two disjoint curves: best sample pair refined by
/// alternating golden-section searches.
fn closest_approach<T: Real>(a: &BoundaryCurve<T>, b: &BoundaryCurve<T>, params: &[T]) -> T {
    let mut best = (T::zero(), T::zero(), T::infinity());
    for &u in params {
        let pa = a.point(u);
        for &v in params {
            let d = (pa - b.point(v)).norm();
            if d < best.2 {
                best = (u, v, d);
            }
        }
    }
    let w = T::one() / lit(params.len() as f64);
    let (mut u, mut v) = (best.0, best.1);
    let mut d = best.2;
    for _ in 0..8 {
        u = golden_min(|s| (a.point(s) - b.point(v)).norm(), u - w, u + w).0;
        let (vn, dn) = golden_min(|s| (a.point(u) - b.point(s)).norm(), v - w, v + w);
        v = vn;
        d = d.min(dn);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::integrate;
    use rand::Rng;

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    fn flat_scene() -> Scene<f64> {
        Scene::new(
            MetricChart::euclidean(),
            BoundaryCurve::circle(v(0.0, 0.0), 4.0),
            vec![BoundaryCurve::circle(v(0.0, 0.0), 1.0)],
            &SceneOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn curvature_closed_forms() {
        let e = MetricChart::euclidean();
        for r in [1.0, 2.0] {
            let s = Scene::new(e.clone(), BoundaryCurve::circle(v(0.0, 0.0), r), vec![], &SceneOptions::default()).unwrap();
            for i in 0..10 {
                let k = s.geodesic_curvature(CurveId::Bounding, i as f64 / 10.0).unwrap();
                assert!((k + 1.0 / r).abs() < 1e-12, "{k}");
            }
        }
        let d = MetricChart::poincare_disk(1e-3);
        let s = Scene::new(d, BoundaryCurve::circle(v(0.0, 0.0), 0.5f64.tanh()), vec![], &SceneOptions::default()).unwrap();
        for i in 0..10 {
            let k = s.geodesic_curvature(CurveId::Bounding, i as f64 / 10.0).unwrap();
            assert!((k + 1f64.cosh() / 1f64.sinh()).abs() < 1e-4, "{k}");
        }
    }

    #[test]
    fn reflection_examples() {
        let s = flat_scene();
        // top of the unit obstacle has nu = (0, 1)
        let hit = s.classify(CurveId::Obstacle(0), &GeodesicState::new(v(0.0, 1.0), v(0.0, -1.0), 0.0)).unwrap();
        assert!((s.reflect(&hit, v(0.0, -1.0)).unwrap() - v(0.0, 1.0)).norm() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.reflect(&hit, v(h, -h)).unwrap() - v(h, h)).norm() < 1e-15);
        assert!(matches!(s.reflect(&hit, v(1.0, 0.0)), Err(SceneError::Tangential { .. })));
    }

    #[test]
    fn reflection_identities_on_the_disk() {
        let chart = MetricChart::poincare_disk(1e-3);
        let s = Scene::new(
            chart.clone(),
            BoundaryCurve::circle(v(0.0, 0.0), 0.8),
            vec![BoundaryCurve::with_coeffs(v(0.2, -0.1), 0.2, vec![(0.01, 0.0), (0.0, 0.005)])],
            &SceneOptions::default(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let id = CurveId::Obstacle(0);
        for _ in 0..100 {
            let u: f64 = rng.gen();
            let p = s.curve(id).point(u);
            let nu = s.unit_normal(id, u).unwrap();
            let omega = chart.unit_at_angle(p, rng.gen_range(0.0..std::f64::consts::TAU)).unwrap();
            let c = chart.inner(p, omega, nu).unwrap();
            let w = if c > 0.0 { -omega } else { omega };
            let hit = s.classify(id, &GeodesicState::new(p, w, 0.0)).unwrap();
            if hit.tangent {
                continue;
            }
            let r = s.reflect(&hit, w).unwrap();
            assert!((chart.norm(p, r).unwrap() - 1.0).abs() < 1e-12);
            assert!((chart.inner(p, r, nu).unwrap() + chart.inner(p, w, nu).unwrap()).abs() < 1e-12);
            let tau = s.unit_tangent(id, u).unwrap();
            assert!(chart.inner(p, r - w, tau).unwrap().abs() < 1e-10);
            let back = s.reflect(&HitEvent { velocity: r, ..hit }, r).unwrap();
            assert!((back - w).norm() < 1e-12);
        }
    }

    #[test]
    fn first_hit_examples() {
        let s = flat_scene();
        let o = Default::default();
        let h = s.first_hit(GeodesicState::new(v(-3.0, 0.0), v(1.0, 0.0), 0.0), 100.0, &o).unwrap().unwrap();
        assert_eq!(h.curve, CurveId::Obstacle(0));
        assert!((h.point - v(-1.0, 0.0)).norm() < 1e-10 && (h.time - 2.0).abs() < 1e-10);
        assert!((h.incidence + 1.0).abs() < 1e-10);
        let h = s.first_hit(GeodesicState::new(v(-3.0, 2.5), v(1.0, 0.0), 0.0), 100.0, &o).unwrap().unwrap();
        assert_eq!(h.curve, CurveId::Bounding);
        // ray-circle oracle: x = sqrt(16 - 2.5^2)
        assert!((h.point.x - (16.0f64 - 6.25).sqrt()).abs() < 1e-9);
        assert!(s.first_hit(GeodesicState::new(v(-3.0, 0.0), v(1.0, 0.0), 0.0), 0.0, &o).unwrap().is_none());
    }

    #[test]
    fn validation_failures() {
        let e = MetricChart::<f64>::euclidean();
        let o = SceneOptions::default();
        let big = BoundaryCurve::circle(v(0.0, 0.0), 4.0);
        let overlap = Scene::new(e.clone(), big.clone(), vec![BoundaryCurve::circle(v(0.0, 0.0), 1.0), BoundaryCurve::circle(v(1.5, 0.0), 1.0)], &o);
        assert!(matches!(overlap, Err(SceneError::Overlap { .. })));
        let outside = Scene::new(e.clone(), big.clone(), vec![BoundaryCurve::circle(v(3.5, 0.0), 1.0)], &o);
        assert!(matches!(outside, Err(SceneError::NotInside { .. })));
        let wavy = BoundaryCurve::with_coeffs(v(0.0, 0.0), 1.0, vec![(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.2, 0.0)]);
        assert!(matches!(Scene::new(e.clone(), big.clone(), vec![wavy], &o), Err(SceneError::NotConvex { .. })));
        let d = MetricChart::poincare_disk(1e-3);
        assert!(matches!(Scene::new(d, BoundaryCurve::circle(v(0.0, 0.0), 1.2), vec![], &o), Err(SceneError::OutsideChart { .. })));
    }

    #[test]
    fn separation_bound() {
        let e = MetricChart::<f64>::euclidean();
        let s = Scene::new(
            e,
            BoundaryCurve::circle(v(0.0, 0.0), 4.0),
            vec![BoundaryCurve::circle(v(-1.5, 0.0), 1.0), BoundaryCurve::circle(v(1.5, 0.0), 1.0)],
            &SceneOptions::default(),
        )
        .unwrap();
        assert!((s.min_separation().unwrap() - 1.0).abs() < 1e-8);
        assert!(flat_scene().min_separation().is_none());
    }

    #[test]
    fn convexity_sign_is_constant_over_samples() {
        let d = MetricChart::poincare_disk(1e-3);
        let c = BoundaryCurve::with_coeffs(v(-0.1, 0.2), 0.25, vec![(0.0, 0.01), (0.012, -0.004), (0.002, 0.0)]);
        let s = Scene::new(d, BoundaryCurve::circle(v(0.0, 0.0), 0.8), vec![c], &SceneOptions::default()).unwrap();
        for i in 0..512 {
            assert!(s.geodesic_curvature(CurveId::Obstacle(0), (i as f64 + 0.5) / 512.0).unwrap() < 0.0);
        }
    }

    #[test]
    fn advance_skips_grazed_obstacle() {
        let s = flat_scene();
        let o = IntegratorOptions::default();
        // start on top of the obstacle moving tangentially
        let leg = s.advance(GeodesicState::new(v(0.0, 1.0), v(1.0, 0.0), 0.0), 100.0, true, Some(0), &o).unwrap();
        assert_eq!(leg.hit.unwrap().curve, CurveId::Bounding);
        let whole = integrate(s.chart(), GeodesicState::new(v(0.0, 1.0), v(1.0, 0.0), 0.0), leg.end.time, &crate::geodesic::NoEvents, &o).unwrap();
        assert!((whole.end.position - leg.end.position).norm() < 1e-9);
        assert!(leg.path.t_start() == Some(0.0) && (leg.path.t_end().unwrap() - leg.end.time).abs() < 1e-12);
    }
}
