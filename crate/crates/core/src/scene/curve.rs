use crate::geodesic::{bracketed_root, golden_min};
use crate::scalar::{lit, Real, Vec2};

/// Side of the curve the normal points to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Away from the enclosed region (the default for both S and obstacles).
    #[default]
    Outward,
    Inward,
}

/// Star-shaped closed curve `c(u) = center + r(2 pi u) (cos, sin)` with
/// `r(theta) = radius + sum_m a_m cos(m theta) + b_m sin(m theta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve<T> {
    pub center: Vec2<T>,
    pub radius: T,
    /// `(a_m, b_m)` for `m = 1..=M`.
    pub coeffs: Vec<(T, T)>,
    pub orientation: Orientation,
}

impl<T: Real> BoundaryCurve<T> {
    pub fn circle(center: Vec2<T>, radius: T) -> Self {
        Self { center, radius, coeffs: Vec::new(), orientation: Orientation::Outward }
    }

    pub fn with_coeffs(center: Vec2<T>, radius: T, coeffs: Vec<(T, T)>) -> Self {
        Self { center, radius, coeffs, orientation: Orientation::Outward }
    }

    /// `(r, r', r'')` with respect to the polar angle.
    pub fn radial(&self, theta: T) -> (T, T, T) {
        let (mut r, mut r1, mut r2) = (self.radius, T::zero(), T::zero());
        for (i, &(a, b)) in self.coeffs.iter().enumerate() {
            let m = lit::<T>((i + 1) as f64);
            let (s, c) = (m * theta).sin_cos();
            r = r + a * c + b * s;
            r1 = r1 + m * (b * c - a * s);
            r2 = r2 - m * m * (a * c + b * s);
        }
        (r, r1, r2)
    }

    #[inline]
    fn theta(u: T) -> T {
        T::TAU() * u
    }

    pub fn point(&self, u: T) -> Vec2<T> {
        let th = Self::theta(u);
        self.center + Vec2::from_angle(th) * self.radial(th).0
    }

    /// `dc/du`.
    pub fn tangent(&self, u: T) -> Vec2<T> {
        let th = Self::theta(u);
        let (r, r1, _) = self.radial(th);
        let e = Vec2::from_angle(th);
        (e * r1 + e.perp() * r) * T::TAU()
    }

    /// `d^2 c / du^2`.
    pub fn second_derivative(&self, u: T) -> Vec2<T> {
        let th = Self::theta(u);
        let (r, r1, r2) = self.radial(th);
        let e = Vec2::from_angle(th);
        (e * (r2 - r) + e.perp() * (lit::<T>(2.0) * r1)) * (T::TAU() * T::TAU())
    }

    /// Chart-Euclidean normal direction (unnormalised) on the oriented side.
    pub fn normal_direction(&self, u: T) -> Vec2<T> {
        let n = -self.tangent(u).perp();
        match self.orientation {
            Orientation::Outward => n,
            Orientation::Inward => -n,
        }
    }

    /// Implicit function: negative inside, zero on the curve, positive outside.
    #[inline]
    pub fn implicit(&self, p: Vec2<T>) -> T {
        let d = p - self.center;
        d.norm() - self.radial(d.angle()).0
    }

    /// Curve parameter of the radial projection of `p`.
    pub fn param_of(&self, p: Vec2<T>) -> T {
        let u = (p - self.center).angle() / T::TAU();
        if u < T::zero() {
            u + T::one()
        } else {
            u
        }
    }

    /// Copy with `(a_m, b_m)` shifted by `(da, db)`, growing the series if needed.
    pub fn perturbed(&self, m: usize, da: T, db: T) -> Self {
        let mut out = self.clone();
        assert!(m >= 1, "harmonic index starts at 1");
        if out.coeffs.len() < m {
            out.coeffs.resize(m, (T::zero(), T::zero()));
        }
        let (a, b) = out.coeffs[m - 1];
        out.coeffs[m - 1] = (a + da, b + db);
        out
    }

    /// The same point set described about another interior `center` with
    /// `harmonics` Fourier modes, fitted from `samples` radial intersections.
    pub fn resample_about(&self, center: Vec2<T>, harmonics: usize, samples: usize) -> Self {
        assert!(samples > 2 * harmonics, "need more samples than twice the harmonics");
        assert!(self.implicit(center) < T::zero(), "new center must be inside the curve");
        let reach = (center - self.center).norm() + self.max_radius() * lit(2.0);
        let radii: Vec<T> = (0..samples)
            .map(|k| {
                let th = T::TAU() * lit::<T>(k as f64) / lit::<T>(samples as f64);
                let e = Vec2::from_angle(th);
                // g > 0 inside, decreasing through the curve along the ray
                let g = |rho: T| Ok::<T, ()>(-self.implicit(center + e * rho));
                let (rho, _) = bracketed_root(g, T::zero(), g(T::zero()).unwrap(), reach, g(reach).unwrap(), T::epsilon() * lit(4.0))
                    .expect("infallible");
                rho
            })
            .collect();
        let n = lit::<T>(samples as f64);
        let mean = radii.iter().fold(T::zero(), |a, &r| a + r) / n;
        let coeffs = (1..=harmonics)
            .map(|m| {
                let (mut a, mut b) = (T::zero(), T::zero());
                for (k, &r) in radii.iter().enumerate() {
                    let th = T::TAU() * lit::<T>((m * k) as f64) / n;
                    a = a + r * th.cos();
                    b = b + r * th.sin();
                }
                (a * lit(2.0) / n, b * lit(2.0) / n)
            })
            .collect();
        Self { center, radius: mean, coeffs, orientation: self.orientation }
    }

    /// Upper bound on `r(theta)`.
    pub fn max_radius(&self) -> T {
        self.coeffs.iter().fold(self.radius, |acc, &(a, b)| acc + a.abs() + b.abs())
    }

    /// Chart Hausdorff distance between two curves: nearest samples refined
    /// by a golden-section search on the other curve's parameter.
    pub fn hausdorff(&self, other: &Self, samples: usize) -> T {
        let n = lit::<T>(samples as f64);
        let directed = |a: &Self, b: &Self| {
            let pb: Vec<Vec2<T>> = (0..samples).map(|i| b.point(lit::<T>(i as f64) / n)).collect();
            (0..samples)
                .map(|i| {
                    let x = a.point(lit::<T>(i as f64) / n);
                    let j = (0..samples)
                        .min_by(|&p, &q| (x - pb[p]).norm().partial_cmp(&(x - pb[q]).norm()).unwrap())
                        .unwrap_or(0);
                    let uj = lit::<T>(j as f64) / n;
                    golden_min(|v| (x - b.point(v)).norm(), uj - T::one() / n, uj + T::one() / n).1
                })
                .fold(T::zero(), T::max)
        };
        directed(self, other).max(directed(other, self))
    }
}
