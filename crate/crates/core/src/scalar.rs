//! Scalar abstraction shared by every numerical module, plus a tiny 2-vector.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the geometry is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Floor applied to user tolerances so that `f32` runs stay attainable.
    fn tolerance_floor() -> Self {
        Self::epsilon() * lit(128.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Converts a scalar back to `f64` (for reporting and CSV output).
#[inline]
pub fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Chart coordinates or chart components of a tangent vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at polar angle `theta`.
    #[inline]
    pub fn from_angle(theta: T) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// Euclidean (chart) length.
    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    /// Counter-clockwise quarter turn. In a conformal chart this is also the
    /// metric quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vec2<U> {
        Vec2::new(lit(to_f64(self.x)), lit(to_f64(self.y)))
    }

    pub fn to_f64(self) -> [f64; 2] {
        [to_f64(self.x), to_f64(self.y)]
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Real> Div<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}
