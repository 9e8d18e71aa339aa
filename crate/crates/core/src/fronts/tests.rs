use super::*;
use crate::billiard::Caps;
use crate::manifold::MetricChart;
use crate::scene::{BoundaryCurve, CurveId, Scene, SceneOptions};

fn v(x: f64, y: f64) -> Vec2<f64> {
    Vec2::new(x, y)
}

fn flat(bounding: f64, obstacles: Vec<BoundaryCurve<f64>>) -> Scene<f64> {
    Scene::new(MetricChart::euclidean(), BoundaryCurve::circle(v(0.0, 0.0), bounding), obstacles, &SceneOptions::default()).unwrap()
}

fn disk(obstacles: Vec<BoundaryCurve<f64>>) -> Scene<f64> {
    Scene::new(MetricChart::poincare_disk(1e-6), BoundaryCurve::circle(v(0.0, 0.0), 0.9), obstacles, &SceneOptions::default()).unwrap()
}

/// Chart radius of the hyperbolic circle of radius `rho` about the origin.
fn chart_radius(rho: f64) -> f64 {
    (rho / 2.0).tanh()
}

fn max_dev(front: &Front<f64>, target: f64) -> f64 {
    front.samples.iter().map(|s| (s.f - target).abs()).fold(0.0, f64::max)
}

#[test]
fn fornberg_central_weights() {
    let h: f64 = 0.1;
    let xs = [-2.0 * h, -h, 0.0, h, 2.0 * h];
    let w = fd_weights(0.0f64, &xs);
    let d2 = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
    let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
    for k in 0..5 {
        assert!((w[2][k] * h * h - d2[k]).abs() < 1e-12);
        assert!((w[1][k] * h - d1[k]).abs() < 1e-12);
    }
    assert!((w[0][2] - 1.0).abs() < 1e-15);
}

#[test]
fn circle_and_line_convexity() {
    let e = MetricChart::euclidean();
    let c = Front::chart_circle(&e, v(0.3, -0.2), 1.0, 256).unwrap();
    assert!(max_dev(&c, -1.0) < 1e-6);
    assert_eq!(front_convexity(&e, &c, 7).unwrap(), c.samples[7].f);
    let us: Vec<f64> = (0..40).map(|i| i as f64 * 0.05).collect();
    let pts: Vec<_> = us.iter().map(|&u| v(u, 2.0 * u - 1.0)).collect();
    let nrm = vec![v(2.0, -1.0); 40];
    let line = Front::from_parts(&e, &us, &pts, &nrm, None, Provenance::Constructed).unwrap();
    assert!(max_dev(&line, 0.0) < 1e-6);
    assert!(line.samples.iter().all(|s| (s.normal.norm() - 1.0).abs() < 1e-9));
    assert!(matches!(Front::from_parts(&e, &us[..4], &pts[..4], &nrm[..4], None, Provenance::Constructed), Err(FrontError::TooFewSamples { n: 4 })));
}

#[test]
fn hyperbolic_circle_convexity() {
    let h = MetricChart::poincare_disk(1e-6);
    for rho in [0.5, 1.0, 2.0] {
        let c = Front::chart_circle(&h, v(0.0, 0.0), chart_radius(rho), 256).unwrap();
        assert!(max_dev(&c, -1.0 / rho.tanh()) < 1e-4, "rho = {rho}");
    }
}

#[test]
fn euclidean_propagation() {
    let s = flat(10.0, vec![]);
    let o = IntegratorOptions::default();
    let c = Front::chart_circle(s.chart(), v(0.0, 0.0), 1.0, 256).unwrap();
    assert_eq!(propagate_front(&s, &c, 0.0, &o).unwrap(), c);
    let p = propagate_front(&s, &c, 1.0, &o).unwrap();
    assert!(max_dev(&p, -0.5) < 1e-6);
    assert!(p.samples.iter().all(|x| (x.point.norm() - 2.0).abs() < 1e-9));
    assert_eq!(p.provenance, Provenance::Propagated(1.0));
    // kappa(t) = kappa0 / (1 + kappa0 t) on a wavefront with kappa0 = 1/0.4
    let src = Front::point_source(s.chart(), v(0.5, 0.0), [-0.6, 0.6], 201, 0.4, &o).unwrap();
    let k0 = 1.0 / 0.4;
    let mut prev = src.clone();
    for t in [0.5, 1.0, 2.0, 3.0] {
        let q = propagate_front(&s, &src, t, &o).unwrap();
        assert!(max_dev(&q, -k0 / (1.0 + k0 * t)) < 1e-4);
        assert!(q.samples.iter().zip(&prev.samples).all(|(a, b)| a.raw < b.raw));
        prev = q;
    }
}

#[test]
fn hyperbolic_propagation() {
    let s = disk(vec![]);
    let o = IntegratorOptions::default();
    let c = Front::chart_circle(s.chart(), v(0.0, 0.0), chart_radius(1.0), 256).unwrap();
    let p = propagate_front(&s, &c, 1.0, &o).unwrap();
    assert!(max_dev(&p, -1.0 / 2f64.tanh()) < 1e-4);
    assert!(p.samples.iter().all(|x| (x.point.norm() - chart_radius(2.0)).abs() < 1e-9));
    assert!(p.samples.iter().zip(&c.samples).all(|(a, b)| a.raw < b.raw));
    let res = p.orthogonality_residuals(s.chart()).unwrap();
    assert!(res.iter().all(|r| r.abs() < 1e-9));
}

#[test]
fn involute_of_the_unit_circle() {
    let s = flat(4.0, vec![BoundaryCurve::circle(v(0.0, 0.0), 1.0)]);
    let o = IntegratorOptions::default();
    let arc = [0.0, 0.2];
    let len = 0.4 * std::f64::consts::PI;
    let lambda = len + 0.1;
    let front = build_orthogonal_front(&s, CurveId::Obstacle(0), arc, lambda, 257, &o).unwrap();
    for x in &front.samples {
        let c = Vec2::from_angle(x.u);
        let oracle = c + c.perp() * (lambda - x.u);
        assert!((x.point - oracle).norm() < 1e-8, "{:?} vs {:?}", x.point, oracle);
        assert!((x.normal - c.perp()).norm() < 1e-8);
        assert!((x.f + 1.0 / (lambda - x.u)).abs() < 1e-4 * (1.0 + 1.0 / (lambda - x.u)));
    }
    assert!((front.samples.last().unwrap().u - len).abs() < 1e-12);
    let res = front.orthogonality_residuals(s.chart()).unwrap();
    assert!(res.iter().all(|r| r.abs() < 1e-8), "{:?}", res.iter().fold(0.0f64, |m, r| m.max(r.abs())));
    // lambda below the arc length puts part of the front behind its source
    assert!(build_orthogonal_front(&s, CurveId::Obstacle(0), arc, 0.5 * len, 129, &o).is_err());
}

#[test]
fn orthogonal_fronts_in_the_disk() {
    let s = disk(vec![
        BoundaryCurve::with_coeffs(v(0.2, -0.1), 0.2, vec![(0.005, 0.0), (0.0, 0.004)]),
        BoundaryCurve::circle(v(-0.35, 0.3), 0.15),
    ]);
    let o = IntegratorOptions::default();
    for (k, arc) in [(0, [0.05, 0.15]), (0, [0.5, 0.62]), (1, [0.3, 0.4])] {
        let c = &s.obstacles()[k];
        let m = 4000;
        let du = (arc[1] - arc[0]) / m as f64;
        let len: f64 = (0..m).map(|i| arc[0] + (i as f64 + 0.5) * du).map(|u| s.chart().norm(c.point(u), c.tangent(u)).unwrap() * du).sum();
        let front = build_orthogonal_front(&s, CurveId::Obstacle(k), arc, len + 0.05, 129, &o).unwrap();
        assert!((front.samples[128].u - len).abs() < 1e-6);
        let res = front.orthogonality_residuals(s.chart()).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-6));
        assert!(front.is_strictly_convex());
    }
}

#[test]
fn mirror_equation() {
    let (r, d) = (1.0, 2.0);
    let s = flat(8.0, vec![BoundaryCurve::circle(v(0.0, 0.0), r)]);
    let o = IntegratorOptions::default();
    let t0 = 0.5;
    let src = Front::point_source(s.chart(), v(-r - d, 0.0), [-0.05, 0.05], 101, t0, &o).unwrap();
    let out = reflect_front(&s, &src, REFLECT_EPSILON, 50.0, &o).unwrap();
    assert_eq!(out.provenance, Provenance::Reflected { obstacle: 0 });
    let mid = &out.samples[50];
    // distance flown after the central sample reflects
    let after = (mid.point - v(-r, 0.0)).norm();
    let image = 1.0 / (1.0 / d + 2.0 / r);
    assert!((mid.f + 1.0 / (image + after)).abs() < 1e-3, "{} vs {}", mid.f, -1.0 / (image + after));
    assert!(out.is_strictly_convex());
}

#[test]
fn flat_front_at_normal_incidence() {
    let s = flat(6.0, vec![BoundaryCurve::circle(v(0.0, 0.0), 1.0)]);
    let o = IntegratorOptions::default();
    let us: Vec<f64> = (0..61).map(|i| -0.3 + 0.01 * i as f64).collect();
    let pts: Vec<_> = us.iter().map(|&u| v(-2.0, u)).collect();
    let line = Front::from_parts(s.chart(), &us, &pts, &vec![v(1.0, 0.0); 61], None, Provenance::Constructed).unwrap();
    let out = reflect_front(&s, &line, REFLECT_EPSILON, 20.0, &o).unwrap();
    assert!(out.is_strictly_convex());
    // the wide front straddles the obstacle and must be split first
    let wide: Vec<f64> = (0..81).map(|i| -2.0 + 0.05 * i as f64).collect();
    let pts: Vec<_> = wide.iter().map(|&u| v(-3.0, u)).collect();
    let line = Front::from_parts(s.chart(), &wide, &pts, &vec![v(1.0, 0.0); 81], None, Provenance::Constructed).unwrap();
    assert!(matches!(reflect_front(&s, &line, REFLECT_EPSILON, 20.0, &o), Err(FrontError::Missed { .. })));
    let pieces = split_by_hits(&s, &line, 20.0, &o).unwrap();
    assert_eq!(pieces.len(), 1);
    assert!(pieces[0].samples.iter().all(|x| x.u.abs() < 1.0));
    assert!(reflect_front(&s, &pieces[0], REFLECT_EPSILON, 20.0, &o).unwrap().is_strictly_convex());
}

#[test]
fn reflection_keeps_hyperbolic_fronts_convex() {
    let s = disk(vec![BoundaryCurve::with_coeffs(v(0.25, 0.0), 0.2, vec![(0.01, 0.0)])]);
    let o = IntegratorOptions::default();
    let src = Front::point_source(s.chart(), v(-0.4, 0.1), [-0.25, 0.05], 129, 0.2, &o).unwrap();
    let out = reflect_front(&s, &src, REFLECT_EPSILON, 20.0, &o).unwrap();
    assert!(out.is_strictly_convex(), "{:?}", out.samples.iter().map(|x| x.f).fold(f64::MIN, f64::max));
}

#[test]
fn concentric_fronts_are_orthogonal_everywhere() {
    let s = flat(4.0, vec![]);
    let o = IntegratorOptions::default();
    let x = Front::chart_circle(s.chart(), v(0.0, 0.0), 0.5, 128).unwrap();
    let y = Front::chart_circle(s.chart(), v(0.0, 0.0), 2.0, 128).unwrap();
    let hits = orthogonal_hits(&s, &x, &y, &Caps::default(), 1e-4, &o).unwrap();
    assert_eq!(hits.indices.len(), 128);
}

#[test]
fn offset_fronts_have_isolated_orthogonal_hits() {
    let s = flat(4.0, vec![]);
    let o = IntegratorOptions::default();
    let x = Front::chart_circle(s.chart(), v(0.0, 0.0), 0.5, 256).unwrap();
    let c = v(0.3, 0.1);
    let y = Front::chart_circle(s.chart(), c, 2.0, 256).unwrap();
    let hits = orthogonal_hits(&s, &x, &y, &Caps::default(), 1e-4, &o).unwrap();
    assert_eq!(hits.sign_changes.len(), 2);
    assert_eq!(hits.indices.len(), 2);
    // oracle: the normal from the origin meets Y orthogonally on the line of centres
    let a = c.angle() / std::f64::consts::TAU;
    for (i, target) in hits.indices.iter().zip([a, a + 0.5]) {
        assert!((x.samples[*i].u - target).abs() <= 1.0 / 256.0, "{} vs {}", x.samples[*i].u, target);
    }
}

#[test]
fn orthogonal_hits_after_a_reflection() {
    let s = disk(vec![BoundaryCurve::circle(v(0.3, 0.0), 0.15)]);
    let o = IntegratorOptions::default();
    let x = Front::chart_circle(s.chart(), v(0.0, 0.05), 0.05, 256).unwrap();
    let y = Front::chart_circle(s.chart(), v(0.0, 0.0), 0.8, 256).unwrap();
    let hits = orthogonal_hits(&s, &x, &y, &Caps::default(), 1e-4, &o).unwrap();
    assert!(hits.reflections.iter().any(|&r| r == 1));
    assert!(!hits.sign_changes.is_empty());
    let du = 1.0 / 256.0;
    for &i in &hits.sign_changes {
        let j = (i + 1) % 256;
        let slope = (hits.alignment[j].unwrap() - hits.alignment[i].unwrap()) / du;
        assert!(slope.abs() > 1e-2, "slope {slope} at {i}");
    }
}
