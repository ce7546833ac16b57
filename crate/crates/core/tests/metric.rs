use carnot::catalog::{complexified_heisenberg, free_nilpotent, heisenberg};
use carnot::empirical::{random_cube, rng, SupSearch};
use carnot::linalg;
use carnot::metric::*;
use carnot::scalar::norm;
use proptest::prelude::*;

#[test]
fn default_metrics() {
    assert_eq!(HomogeneousMetric::default_for(&heisenberg(2)), HomogeneousMetric::Koranyi);
    let f = free_nilpotent(2, 3).unwrap();
    let m = HomogeneousMetric::default_for(&f);
    assert!(m.check(&f).is_ok());
    assert!(HomogeneousMetric::Koranyi.check(&f).is_err());
}

#[test]
fn koranyi_frozen_values() {
    // ((x^2 + y^2)^2 + 16 z^2)^(1/4)
    let h = heisenberg(1);
    let g = HomogeneousMetric::Koranyi.gauge(&h, &[3.0, 4.0, 0.0]);
    assert!((g - 5.0).abs() < 1e-12);
    let g = HomogeneousMetric::Koranyi.gauge(&h, &[1.0, 0.0, 1.0]);
    assert!((g - 17f64.powf(0.25)).abs() < 1e-12);
}

#[test]
fn ball_points_lie_in_the_ball() {
    let g = complexified_heisenberg();
    let m = HomogeneousMetric::Koranyi;
    let mut r = rng(3);
    for _ in 0..200 {
        let u = random_cube(&mut r, g.dim());
        let c = random_cube(&mut r, 1)[0];
        if let Some(p) = m.ball_point(&g, &u, c, 0.7) {
            assert!(m.gauge(&g, &p) <= 0.7 + 1e-12);
        }
        if let Some(p) = m.sphere_point(&g, &u, 0.7) {
            assert!((m.gauge(&g, &p) - 0.7).abs() < 1e-9);
        }
    }
}

#[test]
fn estimates_are_finite_and_stable() {
    for g in [heisenberg(1), complexified_heisenberg()] {
        let m = HomogeneousMetric::default_for(&g);
        let a = verify_projection_estimate(&g, &m, 2, 1.0, SupSearch::new(1000, 5));
        let b = verify_projection_estimate(&g, &m, 2, 1.0, SupSearch::new(2000, 5));
        assert!(a.is_finite() && a.drift(&b) < 0.05);
        assert!(b.sup_observed >= a.sup_observed);
        let c = verify_left_inverse_estimate(&g, 1.0, SupSearch::new(1000, 5));
        assert!(c.is_finite() && c.sup_observed >= 1.0 - 1e-9);
    }
}

#[test]
fn first_layer_ratio_is_bounded() {
    let h = heisenberg(1);
    let c = first_layer_constant(&h, &HomogeneousMetric::Koranyi, 1.0, SupSearch::new(2000, 1));
    assert!(c.is_finite() && c.sup_observed <= 1.0 + 1e-9);
}

#[test]
fn quasi_triangle_constant_of_koranyi_gauge() {
    // the Koranyi gauge is a genuine distance: the constant is at most 1
    let h = heisenberg(1);
    let c = quasi_triangle_constant(&h, &HomogeneousMetric::Koranyi, 1.0, SupSearch::new(2000, 2));
    assert!(c.sup_observed <= 1.0 + 1e-9, "{}", c.sup_observed);
}

#[test]
fn words_reach_every_point() {
    let f = heisenberg(3);
    let m = HomogeneousMetric::default_for(&f);
    let ws = WordSystem::standard(&f, &m).unwrap();
    let mut r = rng(8);
    for _ in 0..20 {
        let x: Vec<f64> = random_cube(&mut r, f.dim()).iter().map(|v| 0.3 * v).collect();
        let a = ws.solve_word(&f, &x).unwrap();
        let p = ws.generating_word(&f, &a, ws.len()).unwrap();
        assert!(norm(&linalg::sub(&p, &x)) < 1e-9);
    }
    // step 3 has no closed-form solver
    let f3 = free_nilpotent(2, 3).unwrap();
    assert!(WordSystem::standard(&f3, &HomogeneousMetric::default_for(&f3)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gauge_is_homogeneous_and_left_invariant(
        x in proptest::collection::vec(-1.0f64..1.0, 5),
        y in proptest::collection::vec(-1.0f64..1.0, 5),
        p in proptest::collection::vec(-1.0f64..1.0, 5),
        r in 0.05f64..5.0,
    ) {
        let h = heisenberg(2);
        let m = HomogeneousMetric::Koranyi;
        let g = m.gauge(&h, &h.dilate(&x, &r));
        prop_assert!((g - r * m.gauge(&h, &x)).abs() <= 1e-10 * (1.0 + g));
        let d = m.dist(&h, &x, &y);
        let px = carnot::bch::group_product(&h, &p, &x);
        let py = carnot::bch::group_product(&h, &p, &y);
        prop_assert!((m.dist(&h, &px, &py) - d).abs() <= 1e-9 * (1.0 + d));
        prop_assert!((m.gauge(&h, &linalg::neg(&x)) - m.gauge(&h, &x)).abs() <= 1e-12);
    }
}
