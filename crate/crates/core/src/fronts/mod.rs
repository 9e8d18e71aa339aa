//! Convex fronts: sampled curves with a unit normal field, their
//! convexity, normal propagation, reflection and orthogonal hits.

mod hits;
mod ops;

pub use hits::{orthogonal_hits, OrthogonalHits};
pub use ops::{build_orthogonal_front, propagate_front, reflect_front, split_by_hits, REFLECT_EPSILON};

use crate::geodesic::{geodesic_step, GeodesicState, IntegrationError, IntegratorOptions};
use crate::manifold::{GeometryError, MetricChart};
use crate::scalar::{lit, to_f64, Real, Vec2};
use crate::scene::SceneError;

/// Samples required by the five-point stencil.
pub const STENCIL: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance<T> {
    Constructed,
    Propagated(T),
    Reflected { obstacle: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontSample<T> {
    pub u: T,
    pub point: Vec2<T>,
    /// Metric-unit normal, the direction the front moves in.
    pub normal: Vec2<T>,
    /// Geodesic curvature `<nabla_u y_u, omega>_g / |y_u|_g^2`.
    pub f: T,
    /// `<nabla_u y_u, omega>_g` for the front's own parameter `u`.
    pub raw: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Front<T> {
    pub samples: Vec<FrontSample<T>>,
    /// Parameter period of a closed front.
    pub period: Option<T>,
    pub provenance: Provenance<T>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrontError {
    #[error("front needs at least {STENCIL} samples, got {n}")]
    TooFewSamples { n: usize },
    #[error("front parameters must be strictly increasing (sample {index})")]
    BadGrid { index: usize },
    #[error("sample {index} hits obstacles[{obstacle}] at t = {time}")]
    Collision { index: usize, obstacle: usize, time: f64 },
    #[error("sample {index} leaves the free region")]
    LeftRegion { index: usize },
    #[error("sample {index} is not strictly convex (f = {f})")]
    NotConvex { index: usize, f: f64 },
    #[error("sample {index} meets an obstacle tangentially")]
    Tangential { index: usize },
    #[error("sample {index} hits obstacles[{other}] instead of obstacles[{first}]")]
    MixedHits { index: usize, first: usize, other: usize },
    #[error("sample {index} misses every obstacle")]
    Missed { index: usize },
    #[error("sample {index}: more than {cap} reflections")]
    ReflectionCap { index: usize, cap: usize },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// Finite-difference weights for derivatives 0, 1, 2 at `x0` on arbitrary
/// nodes (Fornberg's recursion).
pub(crate) fn fd_weights<T: Real>(x0: T, xs: &[T]) -> [Vec<T>; 3] {
    let n = xs.len();
    let mut c = [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
    let mut c1 = T::one();
    let mut c4 = xs[0] - x0;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(2);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (lit::<T>(k as f64) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - lit::<T>(k as f64) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil node indices and parameter shifts for sample `i`.
fn stencil<T: Real>(n: usize, i: usize, period: Option<T>) -> [(usize, T); STENCIL] {
    let half = STENCIL as isize / 2;
    match period {
        Some(p) => std::array::from_fn(|k| {
            let j = i as isize + k as isize - half;
            let wraps = j.div_euclid(n as isize);
            (j.rem_euclid(n as isize) as usize, p * lit::<T>(wraps as f64))
        }),
        None => {
            let lo = (i as isize - half).clamp(0, n as isize - STENCIL as isize) as usize;
            std::array::from_fn(|k| (lo + k, T::zero()))
        }
    }
}

/// `(f, raw)` at sample `i` by covariant finite differences.
fn convexity_at<T: Real>(
    chart: &MetricChart<T>,
    us: &[T],
    pts: &[Vec2<T>],
    normal: Vec2<T>,
    period: Option<T>,
    i: usize,
) -> Result<(T, T), GeometryError> {
    let p = pts[i];
    let (d1, d2) = derivatives(us, pts, period, i);
    let acc = d2 + chart.connection(p, d1, d1)?;
    let raw = chart.inner(p, acc, normal)?;
    Ok((raw / chart.inner(p, d1, d1)?, raw))
}

/// First and second parameter derivatives of the sample curve at `i`.
fn derivatives<T: Real>(us: &[T], pts: &[Vec2<T>], period: Option<T>, i: usize) -> (Vec2<T>, Vec2<T>) {
    let st = stencil(us.len(), i, period);
    let xs: [T; STENCIL] = std::array::from_fn(|k| us[st[k].0] + st[k].1);
    let w = fd_weights(us[i], &xs);
    let mut d1 = Vec2::zero();
    let mut d2 = Vec2::zero();
    for (k, &(j, _)) in st.iter().enumerate() {
        d1 += pts[j] * w[1][k];
        d2 += pts[j] * w[2][k];
    }
    (d1, d2)
}

impl<T: Real> Front<T> {
    /// Assembles a front from its samples and computes the convexity scalars.
    /// Normals are rescaled to metric unit length.
    pub fn from_parts(
        chart: &MetricChart<T>,
        us: &[T],
        points: &[Vec2<T>],
        normals: &[Vec2<T>],
        period: Option<T>,
        provenance: Provenance<T>,
    ) -> Result<Self, FrontError> {
        let n = us.len();
        if n < STENCIL {
            return Err(FrontError::TooFewSamples { n });
        }
        if let Some(i) = (1..n).find(|&i| !(us[i] > us[i - 1])) {
            return Err(FrontError::BadGrid { index: i });
        }
        if period.is_some_and(|p| !(us[n - 1] - us[0] < p)) {
            return Err(FrontError::BadGrid { index: n - 1 });
        }
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let p = points[i];
            let normal = normals[i] / chart.norm(p, normals[i])?;
            let (f, raw) = convexity_at(chart, us, points, normal, period, i)?;
            samples.push(FrontSample { u: us[i], point: p, normal, f, raw });
        }
        Ok(Self { samples, period, provenance })
    }

    /// Recomputes the convexity scalars of a front with moved samples.
    fn rebuild(chart: &MetricChart<T>, like: &Self, points: &[Vec2<T>], normals: &[Vec2<T>], provenance: Provenance<T>) -> Result<Self, FrontError> {
        let us: Vec<T> = like.samples.iter().map(|s| s.u).collect();
        Self::from_parts(chart, &us, points, normals, like.period, provenance)
    }

    /// Chart circle with outward normals, parametrised by `u` in `[0, 1)`.
    pub fn chart_circle(chart: &MetricChart<T>, center: Vec2<T>, radius: T, n: usize) -> Result<Self, FrontError> {
        let us: Vec<T> = (0..n).map(|i| lit::<T>(i as f64 / n as f64)).collect();
        let dirs: Vec<Vec2<T>> = us.iter().map(|&u| Vec2::from_angle(u * T::TAU())).collect();
        let pts: Vec<Vec2<T>> = dirs.iter().map(|&d| center + d * radius).collect();
        Self::from_parts(chart, &us, &pts, &dirs, Some(T::one()), Provenance::Constructed)
    }

    /// Wavefront at distance `t0` from `p`, for launch angles in
    /// `[theta0, theta1]` (a full turn gives a closed front).
    pub fn point_source(
        chart: &MetricChart<T>,
        p: Vec2<T>,
        theta: [T; 2],
        n: usize,
        t0: T,
        opts: &IntegratorOptions<T>,
    ) -> Result<Self, FrontError> {
        let closed = (theta[1] - theta[0] - T::TAU()).abs() <= T::epsilon() * lit(16.0);
        let den = lit::<T>(if closed { n as f64 } else { (n.max(2) - 1) as f64 });
        let us: Vec<T> = (0..n).map(|i| theta[0] + (theta[1] - theta[0]) * lit::<T>(i as f64) / den).collect();
        let mut pts = Vec::with_capacity(n);
        let mut nrm = Vec::with_capacity(n);
        for &th in &us {
            let s = geodesic_step(chart, GeodesicState::new(p, chart.unit_at_angle(p, th)?, T::zero()), t0, opts)?;
            pts.push(s.position);
            nrm.push(s.velocity);
        }
        Self::from_parts(chart, &us, &pts, &nrm, closed.then(|| T::TAU()), Provenance::Constructed)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.period.is_some()
    }

    /// All samples have `f < 0`.
    pub fn is_strictly_convex(&self) -> bool {
        self.samples.iter().all(|s| s.f < T::zero())
    }

    /// First sample that is not strictly convex.
    pub fn check_convex(&self) -> Result<(), FrontError> {
        match self.samples.iter().position(|s| !(s.f < T::zero())) {
            Some(index) => Err(FrontError::NotConvex { index, f: to_f64(self.samples[index].f) }),
            None => Ok(()),
        }
    }

    /// `<y_u, omega>_g / |y_u|_g` per sample: zero when the normal field is
    /// orthogonal to the curve.
    pub fn orthogonality_residuals(&self, chart: &MetricChart<T>) -> Result<Vec<T>, FrontError> {
        let us: Vec<T> = self.samples.iter().map(|s| s.u).collect();
        let pts: Vec<Vec2<T>> = self.samples.iter().map(|s| s.point).collect();
        (0..self.len())
            .map(|i| {
                let s = &self.samples[i];
                let (d1, _) = derivatives(&us, &pts, self.period, i);
                Ok(chart.inner(s.point, d1, s.normal)? / chart.norm(s.point, d1)?)
            })
            .collect()
    }

    pub(crate) fn points(&self) -> Vec<Vec2<T>> {
        self.samples.iter().map(|s| s.point).collect()
    }
}

/// Convexity scalar `f` of sample `i` (geodesic curvature against the
/// normal, negative for a strictly convex front).
pub fn front_convexity<T: Real>(chart: &MetricChart<T>, front: &Front<T>, i: usize) -> Result<T, FrontError> {
    if front.len() < STENCIL {
        return Err(FrontError::TooFewSamples { n: front.len() });
    }
    let us: Vec<T> = front.samples.iter().map(|s| s.u).collect();
    Ok(convexity_at(chart, &us, &front.points(), front.samples[i].normal, front.period, i)?.0)
}

#[cfg(test)]
mod tests;
