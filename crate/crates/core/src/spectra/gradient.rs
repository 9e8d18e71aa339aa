use super::{not_eligible, shoot_at, SpectraError, SpectrumRecord};
use crate::billiard::{boundary_launch, Caps, Status, TrajectoryRecord};
use crate::geodesic::IntegratorOptions;
use crate::scalar::{lit, to_f64, Real};
use crate::scene::{CurveId, Scene};

/// Exit-point drift accepted when re-shooting with `y` held fixed.
const Y_DRIFT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck<T> {
    /// Central difference of the travelling time along the boundary tangent.
    pub numeric: T,
    /// `-<gamma'(0), tau>_g`.
    pub analytic: T,
    /// Largest exit-point drift of the two re-shot trajectories.
    pub y_drift: T,
}

impl<T: Real> GradCheck<T> {
    pub fn error(&self) -> T {
        (self.numeric - self.analytic).abs()
    }
}

/// Signed parameter difference wrapped into `[-1/2, 1/2)`.
fn wrap<T: Real>(d: T) -> T {
    d - (d + lit(0.5)).floor()
}

/// Re-shoots from boundary parameter `x` adjusting the launch angle by a
/// secant iteration until the trajectory exits at `y` with the same
/// itinerary.
fn reshoot<T: Real>(
    scene: &Scene<T>,
    x: T,
    theta0: T,
    target: &SpectrumRecord<T>,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<(TrajectoryRecord<T>, T), SpectraError> {
    let y = target.y.expect("eligible record has an exit");
    let eval = |theta: T| -> Result<(TrajectoryRecord<T>, T), SpectraError> {
        let rec = shoot_at(scene, x, theta, caps, opts)?;
        if rec.status != Status::Exited || rec.tangent || rec.itinerary != target.itinerary {
            return Err(SpectraError::Reshoot { drift: f64::INFINITY });
        }
        let d = wrap(rec.exit_param.expect("exited") - y);
        Ok((rec, d))
    };
    let (mut t0, (mut r0, mut f0)) = (theta0, eval(theta0)?);
    let mut t1 = theta0 + lit(1e-6);
    let (mut r1, mut f1) = eval(t1)?;
    for _ in 0..40 {
        if f1.abs() <= T::epsilon() * lit(64.0) || f1 == f0 {
            break;
        }
        let t2 = t1 - f1 * (t1 - t0) / (f1 - f0);
        let (r2, f2) = eval(t2)?;
        (t0, r0, f0) = (t1, r1, f1);
        (t1, r1, f1) = (t2, r2, f2);
    }
    let (rec, f) = if f1.abs() <= f0.abs() { (r1, f1) } else { (r0, f0) };
    if !(f.abs() <= lit(Y_DRIFT)) {
        return Err(SpectraError::Reshoot { drift: to_f64(f) });
    }
    Ok((rec, f.abs()))
}

/// Compares the finite-difference `x`-derivative of the travelling time at
/// fixed exit point with `-<gamma'(0), tau>_g`.
pub fn grad_check<T: Real>(
    scene: &Scene<T>,
    record: &SpectrumRecord<T>,
    h: T,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<GradCheck<T>, SpectraError> {
    if !record.is_clean_exit() || record.y.is_none() {
        return Err(not_eligible(record));
    }
    let x = record.x;
    let start = boundary_launch(scene, x, record.theta)?;
    let tau = scene.unit_tangent(CurveId::Bounding, x)?;
    let analytic = -scene.chart().inner(start.position, start.direction, tau)?;
    let speed = scene.chart().norm(start.position, scene.bounding().tangent(x))?;
    let (plus, dp) = reshoot(scene, x + h, record.theta, record, caps, opts)?;
    let (minus, dm) = reshoot(scene, x - h, record.theta, record, caps, opts)?;
    let numeric = (plus.time - minus.time) / (lit::<T>(2.0) * h * speed);
    Ok(GradCheck { numeric, analytic, y_drift: dp.max(dm) })
}
