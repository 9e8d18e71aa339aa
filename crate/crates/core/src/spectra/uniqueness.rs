use super::{compare_spectra, compute_spectrum, SpectraError, Spectrum, SpectrumGrid};
use crate::billiard::Caps;
use crate::geodesic::IntegratorOptions;
use crate::scalar::{lit, to_f64, Real, Vec2};
use crate::scene::Scene;

/// Grid resolution of the curvature sign check.
const CURVATURE_GRID: usize = 48;

/// Checks `K <= 0` on a grid over the bounding curve's disk.
pub fn check_nonpositive_curvature<T: Real>(scene: &Scene<T>) -> Result<(), SpectraError> {
    let c = scene.bounding().center;
    let r = scene.bounding().max_radius();
    let slack = lit::<T>(1e-9);
    for i in 0..=CURVATURE_GRID {
        for j in 0..=CURVATURE_GRID {
            let f = |k: usize| lit::<T>(2.0 * k as f64 / CURVATURE_GRID as f64 - 1.0) * r;
            let p = c + Vec2::new(f(i), f(j));
            if scene.bounding().implicit(p) > T::zero() || !scene.chart().contains(p) {
                continue;
            }
            let k = scene.chart().gauss_curvature(p)?;
            if k > slack {
                return Err(SpectraError::PositiveCurvature { x: to_f64(p.x), y: to_f64(p.y), k: to_f64(k) });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessRow<T> {
    pub eps: T,
    /// Chart Hausdorff distance between the base and perturbed obstacle.
    pub hausdorff: T,
    pub sup_dev: T,
    pub mean_dev: T,
    pub unmatched: T,
    /// Why the perturbed scene was rejected, if it was.
    pub skipped: Option<String>,
}

/// Perturbs harmonic `harmonic` (cosine coefficient) of obstacle `obstacle`
/// by `eps` times its base radius and compares each spectrum with the base.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_experiment<T: Real>(
    scene: &Scene<T>,
    obstacle: usize,
    harmonic: usize,
    eps: &[T],
    grid: &SpectrumGrid<T>,
    caps: &Caps<T>,
    opts: &IntegratorOptions<T>,
) -> Result<(Spectrum<T>, Vec<UniquenessRow<T>>), SpectraError> {
    check_nonpositive_curvature(scene)?;
    let base_curve = &scene.obstacles()[obstacle];
    let base = compute_spectrum(scene, grid, caps, opts);
    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let curve = base_curve.perturbed(harmonic, e * base_curve.radius, T::zero());
        let hausdorff = base_curve.hausdorff(&curve, 1024);
        let row = match scene.with_obstacle(obstacle, curve) {
            Ok(perturbed) => {
                let cmp = compare_spectra(&base, &compute_spectrum(&perturbed, grid, caps, opts))?;
                UniquenessRow { eps: e, hausdorff, sup_dev: cmp.sup_dev, mean_dev: cmp.mean_dev, unmatched: cmp.unmatched, skipped: None }
            }
            Err(err) => UniquenessRow { eps: e, hausdorff, sup_dev: T::nan(), mean_dev: T::nan(), unmatched: T::nan(), skipped: Some(err.to_string()) },
        };
        rows.push(row);
    }
    Ok((base, rows))
}
