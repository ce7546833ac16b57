use carnot::catalog::{complexified_heisenberg, free_nilpotent, heisenberg};
use carnot::curves::*;
use carnot::linalg;
use carnot::metric::HomogeneousMetric;
use carnot::scalar::norm;

#[test]
fn circle_lift_encloses_its_area() {
    // the z increment of a closed loop is the signed enclosed area
    let h = heisenberg(1);
    let lift = horizontal_lift(&h, &HorizontalControl::circle(2, 0.5), &h.zero(), 256, 1e-12).unwrap();
    let end = lift.curve.last();
    assert!(end[0].abs() < 1e-10 && end[1].abs() < 1e-10);
    assert!((end[2] - std::f64::consts::PI * 0.25).abs() < 1e-9);
}

#[test]
fn lift_from_a_translated_start_is_translated() {
    let h = heisenberg(1);
    let c = HorizontalControl::parabola(2, 1.0);
    let p = vec![0.3, -0.2, 0.5];
    let a = horizontal_lift(&h, &c, &h.zero(), 128, 1e-12).unwrap();
    let b = horizontal_lift(&h, &c, &p, 128, 1e-12).unwrap();
    for (x, y) in a.curve.points.iter().zip(&b.curve.points) {
        let moved = carnot::bch::group_product(&h, &p, x);
        assert!(norm(&linalg::sub(&moved, y)) < 1e-10);
    }
}

#[test]
fn dilated_control_gives_dilated_lift() {
    let h = heisenberg(1);
    let c = HorizontalControl::parabola(2, 1.0);
    let a = horizontal_lift(&h, &c, &h.zero(), 128, 1e-12).unwrap();
    let b = horizontal_lift(&h, &c.dilated(2.0), &h.zero(), 128, 1e-12).unwrap();
    let da = h.dilate(a.curve.last(), &2.0);
    assert!(norm(&linalg::sub(&da, b.curve.last())) < 1e-9);
}

#[test]
fn sampled_control_matches_analytic() {
    let h = heisenberg(1);
    let n = 2001;
    let times: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let values: Vec<Vec<f64>> = times.iter().map(|t| vec![1.0, 2.0 * t]).collect();
    let c = HorizontalControl::sampled(times, values).unwrap();
    let lift = horizontal_lift(&h, &c, &h.zero(), 200, 1e-10).unwrap();
    assert!((lift.curve.last()[2] - 1.0 / 6.0).abs() < 1e-6);
    assert!(HorizontalControl::sampled(vec![0.0], vec![vec![1.0, 0.0]]).is_err());
}

#[test]
fn pansu_quotient_decays_linearly() {
    for g in [heisenberg(1), complexified_heisenberg(), free_nilpotent(2, 3).unwrap()] {
        let m = g.layer_dim(1);
        let c = HorizontalControl::circle(m, 1.0);
        let conv = pansu_convergence(&g, &c, 0.7, &[1e-1, 1e-2, 1e-3], 16).unwrap();
        assert!((conv.order - 1.0).abs() < 0.05, "{} {}", g.name(), conv.order);
        assert!(conv.sup_average_ratio.is_finite());
    }
}

#[test]
fn pansu_quotient_near_a_corner_is_rejected() {
    let h = heisenberg(1);
    let sq = HorizontalControl::square(2);
    assert!(pansu_convergence(&h, &sq, 1.0, &[1e-1, 1e-2], 8).is_err());
    assert!(pansu_quotient(&h, &sq, 3.99, 0.1, 8).is_err());
}

#[test]
fn sampled_quotient_agrees_with_direct_one() {
    let h = heisenberg(1);
    let c = HorizontalControl::parabola(2, 1.0);
    let lift = horizontal_lift(&h, &c, &h.zero(), 512, 1e-12).unwrap();
    let direct = pansu_quotient(&h, &c, 0.4, 0.05, 32).unwrap();
    let sampled = pansu_quotient_sampled(&h, &lift.curve, &c.eval(0.4), 0.4, 0.05).unwrap();
    assert!(norm(&linalg::sub(&direct, &sampled)) < 1e-4);
}

#[test]
fn riemann_sums_converge_to_the_limit() {
    // gamma(t) = (t, t^2, 0) has limit (s, s^2, -s^3/6)
    let h = heisenberg(1);
    let conv = riemann_convergence(&h, &|t| vec![t, t * t, 0.0], &|t| vec![1.0, 2.0 * t, 0.0], 1.0, &[8, 16, 32, 64]).unwrap();
    assert!(conv.order >= 1.0);
    assert!(conv.errors.windows(2).all(|w| w[1] < w[0]));
    assert!(norm(&linalg::sub(&conv.limit, &[1.0, 1.0, -1.0 / 6.0])) < 1e-12);
}

#[test]
fn variation_of_a_segment_is_its_length() {
    let h = heisenberg(1);
    let m = HomogeneousMetric::Koranyi;
    let c = HorizontalControl::line(vec![0.6, 0.8], 2.0);
    let v = variation(&h, &m, &c, &h.zero(), 8).unwrap();
    assert!((v.by_partitions - 2.0).abs() < 1e-9);
    assert!((v.by_quadrature - 2.0).abs() < 1e-9);
    assert!(v.horizontal);
}

#[test]
fn variation_of_a_circle() {
    let h = heisenberg(1);
    let m = HomogeneousMetric::Koranyi;
    let v = variation(&h, &m, &HorizontalControl::circle(2, 1.0), &h.zero(), 10).unwrap();
    assert!((v.by_quadrature - 2.0 * std::f64::consts::PI).abs() < 1e-6);
    assert!(v.relative_gap < 1e-3, "{}", v.relative_gap);
    assert!(v.partition_sums.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn lipschitz_characterization_of_a_lift() {
    let h = heisenberg(1);
    let m = HomogeneousMetric::Koranyi;
    let lift = horizontal_lift(&h, &HorizontalControl::parabola(2, 1.0), &h.zero(), 1024, 1e-12).unwrap();
    let r = verify_ac_lip_characterization(&h, &m, &lift.curve).unwrap();
    assert!(r.comparable && r.ratio.is_finite() && r.ratio > 0.0);
    let vertical = SampledCurve::from_fn(0.0, 1.0, 64, |t| vec![0.0, 0.0, t]);
    assert!(!verify_ac_lip_characterization(&h, &m, &vertical).unwrap().comparable);
}

#[test]
fn layer_ratios_are_finite() {
    let f = free_nilpotent(2, 3).unwrap();
    let c = HorizontalControl::circle(2, 1.0);
    let x = c.eval(0.0);
    let r = layer_lift_ratios(&f, &c, &x, &[0.5, 0.1, 0.02]).unwrap();
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|e| e.is_finite()));
}

#[test]
fn sampled_curve_interpolation() {
    let c = SampledCurve::from_fn(0.0, 1.0, 10, |t| vec![t * t, 1.0]);
    let v = c.eval(0.35).unwrap();
    assert!((v[0] - 0.35 * 0.35).abs() < 1e-2);
    assert!(c.eval(1.5).is_err());
    assert!(SampledCurve::new(vec![0.0, 0.0], vec![vec![0.0], vec![1.0]]).is_err());
}
