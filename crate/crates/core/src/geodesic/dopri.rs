//! Dormand-Prince 5(4) stepping with Hairer's continuous extension.

use crate::scalar::{lit, Real};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// error weights: 5th order minus embedded 4th order
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub(crate) type State<T, const N: usize> = [T; N];

/// Right-hand side `y' = f(t, y)`.
pub(crate) trait System<T: Real, const N: usize> {
    type Error;
    fn eval(&mut self, t: T, y: &State<T, N>) -> Result<State<T, N>, Self::Error>;
}

#[inline]
fn axpy<T: Real, const N: usize>(y: &State<T, N>, h: T, terms: &[(f64, &State<T, N>)]) -> State<T, N> {
    let mut out = *y;
    for (c, k) in terms {
        let ch = lit::<T>(*c) * h;
        for i in 0..N {
            out[i] = out[i] + ch * k[i];
        }
    }
    out
}

/// One trial step from `(t, y)` with derivative `k1 = f(t, y)`.
pub(crate) struct Trial<T, const N: usize> {
    pub y_new: State<T, N>,
    pub k: [State<T, N>; 7],
    /// Scaled RMS error; the step is acceptable when `err <= 1`.
    pub err: T,
}

pub(crate) fn trial<T: Real, const N: usize, S: System<T, N>>(
    sys: &mut S,
    t: T,
    y: &State<T, N>,
    k1: &State<T, N>,
    h: T,
    atol: T,
    rtol: T,
) -> Result<Trial<T, N>, S::Error> {
    let k2 = sys.eval(t + lit::<T>(C2) * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = sys.eval(t + lit::<T>(C3) * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = sys.eval(t + lit::<T>(C4) * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = sys.eval(t + lit::<T>(C5) * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = sys.eval(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = sys.eval(t + h, &y_new)?;
    let mut acc = T::zero();
    for i in 0..N {
        let e = h
            * (lit::<T>(E1) * k1[i]
                + lit::<T>(E3) * k3[i]
                + lit::<T>(E4) * k4[i]
                + lit::<T>(E5) * k5[i]
                + lit::<T>(E6) * k6[i]
                + lit::<T>(E7) * k7[i]);
        let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
        acc = acc + (e / sc) * (e / sc);
    }
    let err = (acc / lit::<T>(N as f64)).sqrt();
    Ok(Trial { y_new, k: [*k1, k2, k3, k4, k5, k6, k7], err })
}

/// Step size factor after a trial with scaled error `err`.
pub(crate) fn step_factor<T: Real>(err: T) -> T {
    if err <= T::zero() {
        return lit(5.0);
    }
    (lit::<T>(0.9) * err.powf(lit(-0.2))).max(lit(0.2)).min(lit(5.0))
}

/// Continuous extension over one accepted step `[t0, t0 + h]`.
#[derive(Clone, Debug)]
pub struct DenseSegment<T, const N: usize> {
    pub t0: T,
    pub h: T,
    r: [State<T, N>; 5],
}

impl<T: Real, const N: usize> DenseSegment<T, N> {
    pub(crate) fn new(t0: T, h: T, y0: &State<T, N>, y1: &State<T, N>, k: &[State<T, N>; 7]) -> Self {
        let mut r = [[T::zero(); N]; 5];
        for i in 0..N {
            let dy = y1[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            r[0][i] = y0[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * k[6][i] - bspl;
            r[4][i] = h
                * (lit::<T>(D1) * k[0][i]
                    + lit::<T>(D3) * k[2][i]
                    + lit::<T>(D4) * k[3][i]
                    + lit::<T>(D5) * k[4][i]
                    + lit::<T>(D6) * k[5][i]
                    + lit::<T>(D7) * k[6][i]);
        }
        Self { t0, h, r }
    }

    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    /// Interpolated state at time `t` (clamped to the segment).
    pub fn eval(&self, t: T) -> State<T, N> {
        let th = if self.h == T::zero() {
            T::zero()
        } else {
            ((t - self.t0) / self.h).max(T::zero()).min(T::one())
        };
        let th1 = T::one() - th;
        let mut out = [T::zero(); N];
        for i in 0..N {
            out[i] = self.r[0][i]
                + th * (self.r[1][i] + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])));
        }
        out
    }
}

/// Adaptive integration of `sys` from `t0` to `t1` (forward, `t1 >= t0`)
/// without events or projections. Used for the linear transport equations.
pub(crate) fn solve<T: Real, const N: usize, S: System<T, N>>(
    sys: &mut S,
    t0: T,
    t1: T,
    y0: State<T, N>,
    atol: T,
    rtol: T,
    h_max: T,
    max_steps: usize,
) -> Result<Option<State<T, N>>, S::Error> {
    let mut t = t0;
    let mut y = y0;
    if t1 <= t0 {
        return Ok(Some(y));
    }
    let mut h = (t1 - t0).min(h_max).min(lit(0.01));
    let mut k1 = sys.eval(t, &y)?;
    for _ in 0..max_steps {
        let last = t + h >= t1;
        let hs = if last { t1 - t } else { h };
        let tr = trial(sys, t, &y, &k1, hs, atol, rtol)?;
        if tr.err <= T::one() {
            t = if last { t1 } else { t + hs };
            y = tr.y_new;
            k1 = tr.k[6];
            if last {
                return Ok(Some(y));
            }
            h = (hs * step_factor(tr.err)).min(h_max);
        } else {
            h = hs * step_factor(tr.err).min(lit(0.9));
            if h < T::epsilon() * t.abs().max(T::one()) {
                return Ok(None);
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;

    impl System<f64, 2> for Oscillator {
        type Error = ();
        fn eval(&mut self, _t: f64, y: &[f64; 2]) -> Result<[f64; 2], ()> {
            Ok([y[1], -y[0]])
        }
    }

    #[test]
    fn harmonic_oscillator_quarter_period() {
        let y = solve(&mut Oscillator, 0.0, std::f64::consts::FRAC_PI_2, [0.0, 1.0], 1e-12, 1e-12, 0.1, 100_000)
            .unwrap()
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10, "{y:?}");
    }

    #[test]
    fn dense_output_interpolates() {
        let y0 = [0.0, 1.0];
        let k1 = Oscillator.eval(0.0, &y0).unwrap();
        let h = 0.2;
        let tr = trial(&mut Oscillator, 0.0, &y0, &k1, h, 1e-12, 1e-12).unwrap();
        let seg = DenseSegment::new(0.0, h, &y0, &tr.y_new, &tr.k);
        for &t in &[0.0, 0.05, 0.1, 0.17, 0.2] {
            let y = seg.eval(t);
            assert!((y[0] - f64::sin(t)).abs() < 1e-7, "t={t}: {y:?}");
            assert!((y[1] - f64::cos(t)).abs() < 1e-7);
        }
        assert_eq!(seg.eval(0.0), y0);
        assert_eq!(seg.eval(h), tr.y_new);
    }
}
