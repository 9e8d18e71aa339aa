//! Local Riemannian geometry of a conformally flat chart
//! `g = exp(2 phi) (dx^2 + dy^2)`.

use crate::metric_dsl::{parse_expr, DomainError, Expr, ParseError, Program, Var};
use crate::scalar::{lit, Real, Vec2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("point ({x}, {y}) lies outside the chart domain")]
    OutsideChart { x: f64, y: f64 },
    #[error("metric evaluation failed: {0}")]
    Domain(#[from] DomainError),
    #[error("cannot normalise a zero-length vector")]
    ZeroVector,
}

/// Region of the chart where the metric may be evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChartDomain<T> {
    Plane,
    /// Open disk; points closer than `margin` to its rim are rejected.
    Disk { center: Vec2<T>, radius: T, margin: T },
}

impl<T: Real> ChartDomain<T> {
    pub fn contains(&self, p: Vec2<T>) -> bool {
        if !p.is_finite() {
            return false;
        }
        match *self {
            ChartDomain::Plane => true,
            ChartDomain::Disk { center, radius, margin } => (p - center).norm() < radius - margin,
        }
    }

    /// Distance from `p` to the rejected zone (negative outside).
    pub fn clearance(&self, p: Vec2<T>) -> T {
        match *self {
            ChartDomain::Plane => T::infinity(),
            ChartDomain::Disk { center, radius, margin } => radius - margin - (p - center).norm(),
        }
    }
}

/// Tangent vector: chart components attached to a base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector<T> {
    pub base: Vec2<T>,
    pub components: Vec2<T>,
}

impl<T: Real> TangentVector<T> {
    pub fn new(base: Vec2<T>, components: Vec2<T>) -> Self {
        Self { base, components }
    }
}

/// Christoffel symbols indexed `[k][i][j]` for `Gamma^k_{ij}`.
pub type Christoffel<T> = [[[T; 2]; 2]; 2];

/// Conformal factor `phi` with its first and second partials precompiled.
#[derive(Clone, Debug)]
pub struct MetricChart<T> {
    source: String,
    phi: Program,
    phi_x: Program,
    phi_y: Program,
    phi_xx: Program,
    phi_xy: Program,
    phi_yy: Program,
    domain: ChartDomain<T>,
}

impl<T: Real> MetricChart<T> {
    pub fn new(phi: &Expr, domain: ChartDomain<T>) -> Self {
        let dx = phi.differentiate(Var::X);
        let dy = phi.differentiate(Var::Y);
        let dxx = dx.differentiate(Var::X);
        let dxy = dx.differentiate(Var::Y);
        let dyy = dy.differentiate(Var::Y);
        Self {
            source: phi.to_string(),
            phi: Program::compile(phi),
            phi_x: Program::compile(&dx),
            phi_y: Program::compile(&dy),
            phi_xx: Program::compile(&dxx),
            phi_xy: Program::compile(&dxy),
            phi_yy: Program::compile(&dyy),
            domain,
        }
    }

    pub fn from_source(src: &str, domain: ChartDomain<T>) -> Result<Self, ParseError> {
        Ok(Self::new(&parse_expr(src)?, domain))
    }

    /// Flat metric on the whole plane.
    pub fn euclidean() -> Self {
        Self::new(&Expr::Const(0.0), ChartDomain::Plane)
    }

    /// Poincare disk, curvature -1, with the given rim margin.
    pub fn poincare_disk(margin: T) -> Self {
        let phi = parse_expr("ln(2/(1 - (x^2 + y^2)))").expect("builtin expression");
        Self::new(&phi, ChartDomain::Disk { center: Vec2::zero(), radius: T::one(), margin })
    }

    pub fn domain(&self) -> &ChartDomain<T> {
        &self.domain
    }

    /// Rendered conformal factor expression.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn phi_expr(&self) -> &Expr {
        self.phi.expr()
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        self.domain.contains(p)
    }

    #[inline]
    pub fn check(&self, p: Vec2<T>) -> Result<(), GeometryError> {
        if self.domain.contains(p) {
            Ok(())
        } else {
            Err(GeometryError::OutsideChart { x: crate::scalar::to_f64(p.x), y: crate::scalar::to_f64(p.y) })
        }
    }

    pub fn phi(&self, p: Vec2<T>) -> Result<T, GeometryError> {
        self.check(p)?;
        Ok(self.phi.eval(p.x, p.y)?)
    }

    /// `(phi_x, phi_y)` at `p`.
    #[inline]
    pub fn grad_phi(&self, p: Vec2<T>) -> Result<Vec2<T>, GeometryError> {
        self.check(p)?;
        Ok(Vec2::new(self.phi_x.eval(p.x, p.y)?, self.phi_y.eval(p.x, p.y)?))
    }

    /// `(phi_xx, phi_xy, phi_yy)` at `p`.
    pub fn hessian_phi(&self, p: Vec2<T>) -> Result<[T; 3], GeometryError> {
        self.check(p)?;
        Ok([self.phi_xx.eval(p.x, p.y)?, self.phi_xy.eval(p.x, p.y)?, self.phi_yy.eval(p.x, p.y)?])
    }

    /// Conformal scale `exp(phi)`: metric length of a chart-unit vector.
    #[inline]
    pub fn scale(&self, p: Vec2<T>) -> Result<T, GeometryError> {
        Ok(self.phi(p)?.exp())
    }

    #[inline]
    pub fn inner(&self, p: Vec2<T>, u: Vec2<T>, v: Vec2<T>) -> Result<T, GeometryError> {
        let phi = self.phi(p)?;
        Ok((phi + phi).exp() * u.dot(v))
    }

    #[inline]
    pub fn norm(&self, p: Vec2<T>, v: Vec2<T>) -> Result<T, GeometryError> {
        Ok(self.scale(p)? * v.norm())
    }

    pub fn christoffel(&self, p: Vec2<T>) -> Result<Christoffel<T>, GeometryError> {
        let g = self.grad_phi(p)?;
        let (px, py) = (g.x, g.y);
        Ok([[[px, py], [py, -px]], [[-py, px], [px, py]]])
    }

    /// Gauss curvature `K = -exp(-2 phi) (phi_xx + phi_yy)`.
    pub fn gauss_curvature(&self, p: Vec2<T>) -> Result<T, GeometryError> {
        let h = self.hessian_phi(p)?;
        let phi = self.phi(p)?;
        Ok(-(-(phi + phi)).exp() * (h[0] + h[2]))
    }

    /// Rescales `v` to unit metric length.
    pub fn normalize(&self, v: TangentVector<T>) -> Result<TangentVector<T>, GeometryError> {
        let n = self.norm(v.base, v.components)?;
        if !(n > T::zero()) || !n.is_finite() {
            return Err(GeometryError::ZeroVector);
        }
        Ok(TangentVector::new(v.base, v.components / n))
    }

    /// Unit vector at `p` pointing along chart angle `theta`.
    pub fn unit_at_angle(&self, p: Vec2<T>, theta: T) -> Result<Vec2<T>, GeometryError> {
        Ok(Vec2::from_angle(theta) / self.scale(p)?)
    }

    /// Geodesic acceleration `-Gamma^k_{ij} v^i v^j`.
    #[inline]
    pub fn geodesic_acceleration(&self, p: Vec2<T>, v: Vec2<T>) -> Result<Vec2<T>, GeometryError> {
        let g = self.grad_phi(p)?;
        Ok(v * (-lit::<T>(2.0) * g.dot(v)) + g * v.norm_sq())
    }

    /// Covariant correction `Gamma(a, b)` so that `nabla_a B = dB(a) + Gamma(a, b)`.
    #[inline]
    pub fn connection(&self, p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> Result<Vec2<T>, GeometryError> {
        let g = self.grad_phi(p)?;
        Ok(b * g.dot(a) + a * g.dot(b) - g * a.dot(b))
    }
}
